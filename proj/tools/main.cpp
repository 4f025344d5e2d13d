// ssinv: simulate, learn and optimize continuous-review (s,S) lost-sales
// inventory systems driven by phase-type demand and lead-time distributions.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ssinv/dataset.hpp"
#include "ssinv/json_util.hpp"
#include "ssinv/metrics.hpp"
#include "ssinv/mlp.hpp"
#include "ssinv/optimize.hpp"
#include "ssinv/parallel.hpp"
#include "ssinv/phase_type.hpp"
#include "ssinv/simulate.hpp"

#ifndef SSINV_VERSION
#define SSINV_VERSION "0.0.0"
#endif

namespace {

using namespace ssinv;

std::string iso_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

// Data files stay timestamp-free (reproducibility); provenance lives in a
// manifest next to each output.
void write_manifest(const std::string& out_path, const std::string& command,
                    const std::string& config_json, std::uint64_t seed) {
    std::string m = "{\"command\":\"" + command + "\"";
    m += ",\"config\":" + config_json;
    m += ",\"master_seed\":" + std::to_string(seed);
    m += ",\"version\":\"" SSINV_VERSION "\"";
    m += ",\"created\":\"" + iso_now() + "\"}";
    write_text_file(out_path + ".manifest.json", m + "\n");
}

std::string labels_json(const Labels& lab, int S) {
    std::string out = "{\"P\":[";
    for (int i = 0; i <= S; ++i) {
        if (i) out += ',';
        append_json_double(out, lab.P[static_cast<std::size_t>(i)]);
    }
    out += "],\"EC\":" + fmt_double(lab.EC);
    out += ",\"pi0\":" + fmt_double(lab.pi0) + "}";
    return out;
}

Constraint parse_constraint(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--constraint", "expected format k:prob, e.g. 5:0.995");
    Constraint c;
    c.level = std::stoi(text.substr(0, colon));
    c.min_prob = std::stod(text.substr(colon + 1));
    if (c.level < 0 || c.min_prob < 0 || c.min_prob > 1)
        throw CLI::ValidationError("--constraint", "need k >= 0 and prob in [0,1]");
    return c;
}

TrainConfig resolve_train_config(const std::string& target, const std::string& config_path,
                                 int moments, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.target = train_target_from_string(target);
    if (!config_path.empty()) {
        cfg = train_config_from_json(read_text_file(config_path));
        cfg.target = train_target_from_string(target);
    }
    if (moments > 0) {
        cfg.n_D = moments;
        cfg.n_L = moments;
    }
    cfg.seed = seed;
    return cfg;
}

int cmd_gen(int n, int s_max, int max_order, int balanced, std::int64_t budget,
            std::uint64_t seed, const std::string& out) {
    InstanceGenConfig gen;
    gen.S_max = s_max;
    gen.ph.max_order = max_order;
    std::vector<Record> records;
    if (balanced > 0) {
        records = draw_test_records(seed, balanced, gen, budget, default_workers());
    } else {
        records.resize(static_cast<std::size_t>(n));
        parallel_for(n, default_workers(), [&](std::int64_t i) {
            records[static_cast<std::size_t>(i)] =
                generate_record(i, derive_stream_seed(seed, static_cast<std::uint64_t>(i)), gen);
        });
    }
    write_records_jsonl(out, records);
    write_manifest(out, "gen",
                   "{\"n\":" + std::to_string(n) + ",\"s_max\":" + std::to_string(s_max) +
                       ",\"max_order\":" + std::to_string(max_order) +
                       ",\"balanced\":" + std::to_string(balanced) + "}",
                   seed);
    std::cout << dataset_stats_json(dataset_stats(records)) << "\n";
    return 0;
}

int cmd_simulate(const std::string& in, std::uint64_t arrivals, double warmup,
                 std::uint64_t seed, int workers, const std::string& out) {
    std::vector<Record> records = read_records_jsonl(in, true);
    SimConfig cfg;
    cfg.n_arrivals = arrivals;
    cfg.warmup_frac = warmup;
    label_records(records, cfg, seed, workers);
    write_records_jsonl(out, records);
    write_manifest(out, "simulate",
                   "{\"in\":\"" + in + "\",\"arrivals\":" + std::to_string(arrivals) +
                       ",\"warmup\":" + fmt_double(warmup) +
                       ",\"workers\":" + std::to_string(workers) + "}",
                   seed);
    std::cout << "labeled " << records.size() << " records -> " << out << "\n";
    return 0;
}

int cmd_oracle(const std::string& kind, int s, int S, double lambda, double mu, double md1) {
    Labels lab;
    if (kind == "mm") {
        lab = ctmc_oracle(s, S, lambda, mu);
    } else if (kind == "zerolead") {
        lab = zero_lead_oracle(s, S, md1);
    } else {
        throw CLI::ValidationError("--kind", "must be mm or zerolead");
    }
    std::cout << labels_json(lab, S) << "\n";
    return 0;
}

int cmd_train(const std::string& target, const std::string& data, const std::string& val,
              int moments, const std::string& config_path, std::uint64_t seed,
              const std::string& out) {
    const TrainConfig cfg = resolve_train_config(target, config_path, moments, seed);
    const std::vector<Record> train_set = read_records_jsonl(data, false);
    std::vector<Record> val_set;
    if (!val.empty()) val_set = read_records_jsonl(val, false);
    const TrainResult res = train(train_set, val_set, cfg);
    save_checkpoint(out, res.model, cfg);
    write_manifest(out, "train", train_config_json(cfg), seed);
    std::printf("trained %s: %d epochs%s, train loss %.6g, best val loss %.6g -> %s\n",
                target.c_str(), res.model.epochs_run,
                res.history.early_stopped ? " (early stop)" : "", res.model.final_train_loss,
                res.model.final_val_loss, out.c_str());
    return 0;
}

int cmd_eval(const std::string& models, const std::string& test, const std::string& report,
             const std::string& dump) {
    const ModelBundle bundle = load_bundle(models);
    const std::vector<Record> records = read_records_jsonl(test, false);
    const Eigen::MatrixXd X = feature_matrix(records, bundle.pmf.n_D, bundle.pmf.n_L);
    const std::vector<PredictionBundle> preds = predict(bundle, X);
    PerInstanceErrors per;
    const std::vector<GroupReport> reports = evaluate_bundles(records, preds, &per);
    write_text_file(report, report_csv(reports));
    write_manifest(report, "eval", "{\"models\":\"" + models + "\",\"test\":\"" + test + "\"}", 0);
    if (!dump.empty()) {
        std::string d = "id,group,sae,EC,EC_hat,pi0,pi0_hat\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            d += std::to_string(records[i].id) + "," + std::to_string(records[i].meta.group_id) +
                 "," + fmt_double(per.sae[i]) + "," + fmt_double(records[i].labels->EC) + "," +
                 fmt_double(preds[i].EC_hat) + "," + fmt_double(records[i].labels->pi0) + "," +
                 fmt_double(preds[i].pi0_hat) + "\n";
        }
        write_text_file(dump, d);
    }
    for (const GroupReport& r : reports) {
        if (r.group_id == 0)
            std::printf("overall: n=%d SAE=%.4f REM=%.3f%% REc=%.3f%% AEpi0=%.4f\n", r.n, r.sae,
                        r.rem, r.re_c, r.ae_pi0);
    }
    return 0;
}

Eigen::MatrixXd predict_features(const ModelBundle& bundle, int s, int S,
                                 std::vector<double> mom_d, std::vector<double> mom_l) {
    // Normalize to a mean-1 demand process, as in training.
    const double m_D1 = mom_d.at(0);
    double ck = 1;
    for (std::size_t k = 0; k < std::max(mom_d.size(), mom_l.size()); ++k) {
        ck /= m_D1;
        if (k < mom_d.size()) mom_d[k] *= ck;
        if (k < mom_l.size()) mom_l[k] *= ck;
    }
    const std::vector<double> f =
        feature_vector(s, S, mom_d, mom_l, bundle.pmf.n_D, bundle.pmf.n_L);
    Eigen::MatrixXd X(1, static_cast<Eigen::Index>(f.size()));
    for (std::size_t c = 0; c < f.size(); ++c) X(0, static_cast<Eigen::Index>(c)) = f[c];
    return X;
}

int cmd_predict(const std::string& models, int s, int S, const std::vector<double>& mom_d,
                const std::vector<double>& mom_l) {
    const ModelBundle bundle = load_bundle(models);
    const double m_D1 = mom_d.at(0);
    const Eigen::MatrixXd X = predict_features(bundle, s, S, mom_d, mom_l);
    const std::vector<PredictionBundle> preds = predict(bundle, X);
    const PredictionBundle& pb = preds[0];
    std::string out = "{\"s\":" + std::to_string(s) + ",\"S\":" + std::to_string(S);
    out += ",\"P_hat\":[";
    for (int j = 0; j < kPmfPad; ++j) {
        if (j) out += ',';
        append_json_double(out, pb.P_hat[j]);
    }
    out += "],\"EC_hat\":" + fmt_double(pb.EC_hat * m_D1);
    out += ",\"pi0_hat\":" + fmt_double(pb.pi0_hat) + "}";
    std::cout << out << "\n";
    return 0;
}

int cmd_optimize(const std::string& models, const std::string& backend,
                 const std::vector<double>& mom_d, const std::vector<double>& mom_l,
                 const std::string& ph_d_path, const std::string& ph_l_path, double ko, double cr,
                 double ch, double cl, double md1, const std::string& constraint_text, int s_max,
                 std::uint64_t arrivals, std::uint64_t seed, int workers,
                 const std::string& out) {
    CostSpec spec;
    spec.K_o = ko;
    spec.c_r = cr;
    spec.c_h = ch;
    spec.c_l = cl;

    std::optional<Constraint> constraint;
    if (!constraint_text.empty()) constraint = parse_constraint(constraint_text);

    MeasureBackend measure;
    if (!models.empty()) {
        if (mom_d.empty() || mom_l.empty())
            throw CLI::ValidationError("--mom-d/--mom-l", "required with --models");
        spec.m_D1 = md1 > 0 ? md1 : mom_d[0];
        static ModelBundle bundle;  // keep alive for the backend closure
        bundle = load_bundle(models);
        measure = nn_backend(bundle, mom_d, mom_l);
    } else if (backend == "mm") {
        if (mom_d.empty() || mom_l.empty())
            throw CLI::ValidationError("--mom-d/--mom-l", "required with --backend mm");
        spec.m_D1 = md1 > 0 ? md1 : mom_d[0];
        measure = mm_backend(1.0, mom_d[0] / mom_l[0]);
    } else if (backend == "sim") {
        if (ph_d_path.empty() || ph_l_path.empty())
            throw CLI::ValidationError("--ph-d/--ph-l", "required with --backend sim");
        PhaseType D = ph_from_json(read_text_file(ph_d_path));
        PhaseType L = ph_from_json(read_text_file(ph_l_path));
        const double mean_d = ph_moments(D, 1).m[0];
        spec.m_D1 = md1 > 0 ? md1 : mean_d;
        D.T *= mean_d;  // same time rescale for both keeps rho intact
        L.T *= mean_d;
        SimConfig cfg;
        cfg.n_arrivals = arrivals;
        cfg.seed = seed;
        measure = sim_backend(D, L, cfg, workers);
    } else {
        throw CLI::ValidationError("--backend", "must be mm or sim (or use --models)");
    }

    const GridResult result = grid_optimize(measure, spec, constraint, s_max);
    if (!out.empty()) {
        write_text_file(out, grid_csv(result));
        write_manifest(out, "optimize",
                       "{\"backend\":\"" + (models.empty() ? backend : "nn") +
                           "\",\"s_max\":" + std::to_string(s_max) + "}",
                       seed);
    }
    std::cout << grid_summary_json(result) << "\n";
    return 0;
}

int cmd_ablate(const std::string& moments_list, const std::string& target,
               const std::string& data, const std::string& val, const std::string& config_path,
               std::uint64_t seed, const std::string& out) {
    std::vector<int> moment_counts;
    {
        std::string token;
        for (char c : moments_list + ",") {
            if (c == ',') {
                if (!token.empty()) moment_counts.push_back(std::stoi(token));
                token.clear();
            } else {
                token += c;
            }
        }
    }
    if (moment_counts.empty())
        throw CLI::ValidationError("--moments-list", "expected e.g. 1,2,3,4,5");

    const std::vector<Record> train_set = read_records_jsonl(data, false);
    const std::vector<Record> val_set = read_records_jsonl(val, false);

    std::string csv = "target,moments,epochs,val_loss,val_metric\n";
    for (int n : moment_counts) {
        TrainConfig cfg = resolve_train_config(target, config_path, n, seed);
        const TrainResult res = train(train_set, val_set, cfg);
        const double metric = target_metric(res.model, cfg.target, val_set);
        csv += target + "," + std::to_string(n) + "," + std::to_string(res.model.epochs_run) +
               "," + fmt_double(res.model.final_val_loss) + "," + fmt_double(metric) + "\n";
        std::printf("moments=%d: val_loss=%.6g val_metric=%.6g (%d epochs)\n", n,
                    res.model.final_val_loss, metric, res.model.epochs_run);
    }
    write_text_file(out, csv);
    write_manifest(out, "ablate", "{\"moments_list\":\"" + moments_list + "\",\"target\":\"" +
                                      target + "\"}",
                   seed);
    return 0;
}

int cmd_stats(const std::string& in) {
    const std::vector<Record> records = read_records_jsonl(in, false);
    std::cout << dataset_stats_json(dataset_stats(records)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"(s,S) lost-sales inventory: simulation labeling, neural surrogates, "
                 "threshold optimization"};
    app.set_version_flag("--version", SSINV_VERSION);
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate unlabeled system instances (JSONL)");
    int gen_n = 100, gen_smax = 30, gen_maxorder = kMaxPhOrder, gen_balanced = 0;
    std::int64_t gen_budget = 0;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--n", gen_n, "number of instances (i.i.d. mode)");
    gen->add_option("--balanced", gen_balanced,
                    "instances per segment group (32 groups, rejection sampled)");
    gen->add_option("--budget", gen_budget, "draw budget for --balanced (0 = auto)");
    gen->add_option("--s-max", gen_smax, "maximum order-up-to level")->check(CLI::Range(1, 30));
    gen->add_option("--max-order", gen_maxorder, "maximum PH order")->check(CLI::Range(1, 500));
    gen->add_option("--seed", gen_seed, "master seed")->required();
    gen->add_option("--out", gen_out, "output JSONL path")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "label instances by discrete-event simulation");
    std::string sim_in, sim_out;
    std::uint64_t sim_arrivals = 1'000'000, sim_seed = 1;
    double sim_warmup = 0.1;
    int sim_workers = default_workers();
    sim->add_option("--in", sim_in, "input JSONL")->required();
    sim->add_option("--arrivals", sim_arrivals, "simulated demand arrivals per instance");
    sim->add_option("--warmup", sim_warmup, "warm-up fraction of arrivals")
        ->check(CLI::Range(0.0, 0.499));
    sim->add_option("--seed", sim_seed, "labeling seed")->required();
    sim->add_option("--workers", sim_workers, "parallel workers");
    sim->add_option("--out", sim_out, "output JSONL path")->required();

    // oracle
    auto* ora = app.add_subcommand("oracle", "closed-form labels for validation cases");
    std::string ora_kind;
    int ora_s = 0, ora_S = 1;
    double ora_lambda = 1, ora_mu = 1, ora_md1 = 1;
    ora->add_option("--kind", ora_kind, "mm | zerolead")->required();
    ora->add_option("--s", ora_s, "reorder point")->required();
    ora->add_option("--S", ora_S, "order-up-to level")->required();
    ora->add_option("--lambda", ora_lambda, "demand rate (mm)");
    ora->add_option("--mu", ora_mu, "lead rate (mm)");
    ora->add_option("--md1", ora_md1, "mean interarrival (zerolead)");

    // train
    auto* tr = app.add_subcommand("train", "train one surrogate network");
    std::string tr_target, tr_data, tr_val, tr_config, tr_out;
    int tr_moments = 0;
    std::uint64_t tr_seed = 1;
    tr->add_option("--target", tr_target, "pmf | cycle | fulfill")->required();
    tr->add_option("--data", tr_data, "labeled training JSONL")->required();
    tr->add_option("--val", tr_val, "labeled validation JSONL");
    tr->add_option("--moments", tr_moments, "moment count n_D = n_L")->check(CLI::Range(1, 10));
    tr->add_option("--config", tr_config, "JSON training config");
    tr->add_option("--seed", tr_seed, "training seed")->required();
    tr->add_option("--out", tr_out, "checkpoint output path")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "per-group error report on a labeled test set");
    std::string ev_models, ev_test, ev_report, ev_dump;
    ev->add_option("--models", ev_models, "directory with pmf.json/cycle.json/fulfill.json")
        ->required();
    ev->add_option("--test", ev_test, "labeled test JSONL")->required();
    ev->add_option("--report", ev_report, "output CSV path")->required();
    ev->add_option("--dump", ev_dump, "optional per-record dump CSV");

    // predict
    auto* pr = app.add_subcommand("predict", "single-instance inference");
    std::string pr_models;
    int pr_s = 0, pr_S = 1;
    std::vector<double> pr_momd, pr_moml;
    pr->add_option("--models", pr_models)->required();
    pr->add_option("--s", pr_s)->required();
    pr->add_option("--S", pr_S)->required();
    pr->add_option("--mom-d", pr_momd, "raw demand interarrival moments")->required()
        ->expected(-1);
    pr->add_option("--mom-l", pr_moml, "raw lead-time moments")->required()->expected(-1);

    // optimize
    auto* op = app.add_subcommand("optimize", "grid search of (s,S) under a cost spec");
    std::string op_models, op_backend, op_phd, op_phl, op_constraint, op_out;
    std::vector<double> op_momd, op_moml;
    double op_ko = 0, op_cr = 0, op_ch = 0, op_cl = 0, op_md1 = 0;
    int op_smax = 30, op_workers = default_workers();
    std::uint64_t op_arrivals = 1'000'000, op_seed = 1;
    op->add_option("--models", op_models, "NN backend: model directory");
    op->add_option("--backend", op_backend, "mm | sim (alternative to --models)");
    op->add_option("--mom-d", op_momd)->expected(-1);
    op->add_option("--mom-l", op_moml)->expected(-1);
    op->add_option("--ph-d", op_phd, "PH JSON for D (sim backend)");
    op->add_option("--ph-l", op_phl, "PH JSON for L (sim backend)");
    op->add_option("--ko", op_ko, "fixed ordering cost")->required();
    op->add_option("--cr", op_cr, "per-unit purchase cost")->required();
    op->add_option("--ch", op_ch, "holding cost per unit-time")->required();
    op->add_option("--cl", op_cl, "lost-sale cost")->required();
    op->add_option("--md1", op_md1, "mean interarrival in user time units");
    op->add_option("--constraint", op_constraint, "service level k:prob, e.g. 5:0.995");
    op->add_option("--s-max", op_smax)->check(CLI::Range(1, 30));
    op->add_option("--arrivals", op_arrivals, "sim backend arrivals per pair");
    op->add_option("--seed", op_seed, "sim backend seed");
    op->add_option("--workers", op_workers, "sim backend workers");
    op->add_option("--out", op_out, "grid CSV output path");

    // ablate
    auto* ab = app.add_subcommand("ablate", "retrain per moment count, emit accuracy curve");
    std::string ab_list, ab_target = "pmf", ab_data, ab_val, ab_config, ab_out;
    std::uint64_t ab_seed = 1;
    ab->add_option("--moments-list", ab_list, "comma-separated counts, e.g. 1,2,3,4,5")
        ->required();
    ab->add_option("--target", ab_target, "pmf | cycle | fulfill");
    ab->add_option("--data", ab_data)->required();
    ab->add_option("--val", ab_val)->required();
    ab->add_option("--config", ab_config, "JSON training config");
    ab->add_option("--seed", ab_seed)->required();
    ab->add_option("--out", ab_out, "curve CSV output")->required();

    // stats
    auto* st = app.add_subcommand("stats", "dataset shape summary (JSON to stdout)");
    std::string st_in;
    st->add_option("--in", st_in)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(gen_n, gen_smax, gen_maxorder, gen_balanced, gen_budget, gen_seed,
                           gen_out);
        if (sim->parsed())
            return cmd_simulate(sim_in, sim_arrivals, sim_warmup, sim_seed, sim_workers, sim_out);
        if (ora->parsed()) return cmd_oracle(ora_kind, ora_s, ora_S, ora_lambda, ora_mu, ora_md1);
        if (tr->parsed())
            return cmd_train(tr_target, tr_data, tr_val, tr_moments, tr_config, tr_seed, tr_out);
        if (ev->parsed()) return cmd_eval(ev_models, ev_test, ev_report, ev_dump);
        if (pr->parsed()) return cmd_predict(pr_models, pr_s, pr_S, pr_momd, pr_moml);
        if (op->parsed())
            return cmd_optimize(op_models, op_backend, op_momd, op_moml, op_phd, op_phl, op_ko,
                                op_cr, op_ch, op_cl, op_md1, op_constraint, op_smax, op_arrivals,
                                op_seed, op_workers, op_out);
        if (ab->parsed())
            return cmd_ablate(ab_list, ab_target, ab_data, ab_val, ab_config, ab_seed, ab_out);
        if (st->parsed()) return cmd_stats(st_in);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
