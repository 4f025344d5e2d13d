#include "ssinv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ssinv/json_util.hpp"
#include "ssinv/parallel.hpp"

namespace ssinv {

namespace {

// Rescales to target mean without refactorizing: the moments of the scaled
// distribution are m^k * (target/mean)^k.
void rescale_with_moments(PhaseType& ph, MomentVector& mom, double target_mean) {
    const double mean = mom.m.at(0);
    ph.T *= mean / target_mean;
    const double c = target_mean / mean;
    double ck = 1;
    for (double& mk : mom.m) {
        ck *= c;
        mk *= ck;
    }
}

double scv_of(const MomentVector& mom) {
    const double m1 = mom.m.at(0);
    return mom.m.at(1) / (m1 * m1) - 1.0;
}

}  // namespace

SystemInstance generate_instance(Rng& rng, const InstanceGenConfig& cfg) {
    SystemInstance inst;
    inst.S = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.S_max)));
    inst.s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(inst.S)));

    inst.D = sample_ph(cfg.ph, rng);
    MomentVector mom_D = ph_moments(inst.D, 1);
    inst.D.T *= mom_D.m[0];  // mean 1

    const double lead_rate = rng.uniform(0.1, 10.0);
    inst.L = sample_ph(cfg.ph, rng);
    MomentVector mom_L = ph_moments(inst.L, 1);
    inst.L.T *= mom_L.m[0] * lead_rate;  // mean 1/lead_rate

    inst.rho = ph_moments(inst.L, 1).m[0] / ph_moments(inst.D, 1).m[0];
    return inst;
}

Record generate_record(std::int64_t id, std::uint64_t seed, const InstanceGenConfig& cfg) {
    // A draw can pass the two-moment degeneracy screen yet still break the
    // ten stored moments (extreme conditioning); redraw deterministically.
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(attempt == 0 ? seed : derive_stream_seed(seed, 0xD0E501ULL + attempt));
        try {
            Record rec;
            rec.id = id;
            rec.meta.seed = seed;

            rec.inst.S = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.S_max)));
            rec.inst.s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(rec.inst.S)));

            rec.inst.D = sample_ph(cfg.ph, rng);
            rec.mom_D = ph_moments(rec.inst.D, kStoredMoments);
            rescale_with_moments(rec.inst.D, rec.mom_D, 1.0);

            const double lead_rate = rng.uniform(0.1, 10.0);
            rec.inst.L = sample_ph(cfg.ph, rng);
            rec.mom_L = ph_moments(rec.inst.L, kStoredMoments);
            rescale_with_moments(rec.inst.L, rec.mom_L, 1.0 / lead_rate);

            rec.inst.rho = rec.mom_L.m[0] / rec.mom_D.m[0];
            rec.meta.scv_D = scv_of(rec.mom_D);
            rec.meta.scv_L = scv_of(rec.mom_L);
            rec.meta.rho = rec.inst.rho;
            rec.meta.group_id = segment_group(rec.meta.scv_D, rec.meta.scv_L, rec.meta.rho,
                                              rec.inst.S, rec.inst.s);
            return rec;
        } catch (const std::runtime_error&) {
            if (attempt >= 64)
                throw std::runtime_error("generate_record: moment computation kept failing");
        }
    }
}

int segment_group(double scv_D, double scv_L, double rho, int S, int s) {
    int g = 1;
    if (scv_D > 5) g += 16;
    if (scv_L > 5) g += 8;
    if (rho > 1) g += 4;
    if (S > 15) g += 2;
    if (s > S / 2) g += 1;
    return g;
}

int segment_group(const Record& rec) {
    return segment_group(rec.meta.scv_D, rec.meta.scv_L, rec.meta.rho, rec.inst.S, rec.inst.s);
}

std::vector<double> feature_vector(int s, int S, std::span<const double> mom_D,
                                   std::span<const double> mom_L, int n_D, int n_L) {
    if (n_D < 1 || n_L < 1 || n_D > static_cast<int>(mom_D.size()) ||
        n_L > static_cast<int>(mom_L.size()))
        throw std::invalid_argument("feature_vector: moment counts out of range");
    std::vector<double> f;
    f.reserve(static_cast<std::size_t>(2 + n_D + n_L));
    f.push_back(static_cast<double>(s));
    f.push_back(static_cast<double>(S));
    for (int k = 0; k < n_D; ++k) {
        if (!(mom_D[static_cast<std::size_t>(k)] > 0))
            throw std::invalid_argument("feature_vector: nonpositive demand moment");
        f.push_back(std::log(mom_D[static_cast<std::size_t>(k)]));
    }
    for (int k = 0; k < n_L; ++k) {
        if (!(mom_L[static_cast<std::size_t>(k)] > 0))
            throw std::invalid_argument("feature_vector: nonpositive lead-time moment");
        f.push_back(std::log(mom_L[static_cast<std::size_t>(k)]));
    }
    return f;
}

std::vector<double> feature_vector(const Record& rec, int n_D, int n_L) {
    return feature_vector(rec.inst.s, rec.inst.S, rec.mom_D.m, rec.mom_L.m, n_D, n_L);
}

std::string record_to_json(const Record& rec) {
    std::string out;
    out.reserve(4096);
    out += "{\"id\":";
    out += std::to_string(rec.id);
    out += ",\"s\":";
    out += std::to_string(rec.inst.s);
    out += ",\"S\":";
    out += std::to_string(rec.inst.S);
    out += ",\"ph_D\":";
    append_ph_json(out, rec.inst.D);
    out += ",\"ph_L\":";
    append_ph_json(out, rec.inst.L);
    out += ",\"mom_D\":";
    append_json_array(out, rec.mom_D.m);
    out += ",\"mom_L\":";
    append_json_array(out, rec.mom_L.m);
    out += ",\"labels\":";
    if (rec.labels) {
        out += "{\"P\":[";
        for (int i = 0; i <= rec.inst.S; ++i) {
            if (i) out += ',';
            append_json_double(out, rec.labels->P[static_cast<std::size_t>(i)]);
        }
        out += "],\"EC\":";
        append_json_double(out, rec.labels->EC);
        out += ",\"pi0\":";
        append_json_double(out, rec.labels->pi0);
        out += '}';
    } else {
        out += "null";
    }
    out += ",\"meta\":{\"scv_D\":";
    append_json_double(out, rec.meta.scv_D);
    out += ",\"scv_L\":";
    append_json_double(out, rec.meta.scv_L);
    out += ",\"rho\":";
    append_json_double(out, rec.meta.rho);
    out += ",\"group_id\":";
    out += std::to_string(rec.meta.group_id);
    out += ",\"seed\":";
    out += std::to_string(rec.meta.seed);
    out += "}}";
    return out;
}

namespace {

PhaseType ph_from_dom(const nlohmann::json& j) {
    PhaseType ph;
    const auto& alpha = j.at("alpha");
    const int p = static_cast<int>(alpha.size());
    ph.alpha = Eigen::VectorXd(p);
    for (int i = 0; i < p; ++i) ph.alpha[i] = alpha[i].get<double>();
    const auto& T = j.at("T");
    ph.T = Eigen::MatrixXd(p, p);
    for (int i = 0; i < p; ++i)
        for (int c = 0; c < p; ++c) ph.T(i, c) = T[i][c].get<double>();
    return ph;
}

}  // namespace

Record record_from_json(const std::string& line, bool keep_ph) {
    const nlohmann::json j = nlohmann::json::parse(line);
    Record rec;
    rec.id = j.at("id").get<std::int64_t>();
    rec.inst.s = j.at("s").get<int>();
    rec.inst.S = j.at("S").get<int>();
    if (keep_ph) {
        rec.inst.D = ph_from_dom(j.at("ph_D"));
        rec.inst.L = ph_from_dom(j.at("ph_L"));
    }
    rec.mom_D.m = j.at("mom_D").get<std::vector<double>>();
    rec.mom_L.m = j.at("mom_L").get<std::vector<double>>();
    const auto& meta = j.at("meta");
    rec.meta.scv_D = meta.at("scv_D").get<double>();
    rec.meta.scv_L = meta.at("scv_L").get<double>();
    rec.meta.rho = meta.at("rho").get<double>();
    rec.meta.group_id = meta.at("group_id").get<int>();
    rec.meta.seed = meta.at("seed").get<std::uint64_t>();
    rec.inst.rho = rec.meta.rho;
    if (!j.at("labels").is_null()) {
        const auto& jl = j.at("labels");
        Labels lab;
        const auto P = jl.at("P").get<std::vector<double>>();
        lab.P.assign(static_cast<std::size_t>(std::max(kPmfPad, rec.inst.S + 1)), 0.0);
        std::copy(P.begin(), P.end(), lab.P.begin());
        lab.EC = jl.at("EC").get<double>();
        lab.pi0 = jl.at("pi0").get<double>();
        rec.labels = std::move(lab);
    }
    return rec;
}

void write_records_jsonl(const std::string& path, std::span<const Record> records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const Record& rec : records) {
        out << record_to_json(rec) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Record> read_records_jsonl(const std::string& path, bool keep_ph) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<Record> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(line, keep_ph));
    }
    return records;
}

void label_records(std::span<Record> records, const SimConfig& base_cfg,
                   std::uint64_t label_seed, int workers) {
    parallel_for(static_cast<std::int64_t>(records.size()), workers, [&](std::int64_t i) {
        Record& rec = records[static_cast<std::size_t>(i)];
        SimConfig cfg = base_cfg;
        cfg.seed = derive_stream_seed(label_seed, static_cast<std::uint64_t>(rec.id));
        rec.labels = simulate_system(rec.inst, cfg);
    });
}

std::vector<Record> draw_test_records(std::uint64_t seed, int per_group,
                                      const InstanceGenConfig& gen, std::int64_t draw_budget,
                                      int workers) {
    if (draw_budget <= 0) draw_budget = 100'000 + 20'000LL * per_group;
    constexpr int kGroups = 32;
    std::vector<int> quota(kGroups, per_group);
    int remaining = kGroups * per_group;
    std::vector<Record> accepted;
    accepted.reserve(static_cast<std::size_t>(remaining));

    constexpr std::int64_t kChunk = 512;
    std::vector<Record> chunk(static_cast<std::size_t>(kChunk));
    for (std::int64_t base = 0; base < draw_budget && remaining > 0; base += kChunk) {
        const std::int64_t n = std::min(kChunk, draw_budget - base);
        parallel_for(n, workers, [&](std::int64_t k) {
            chunk[static_cast<std::size_t>(k)] =
                generate_record(base + k, derive_stream_seed(seed, static_cast<std::uint64_t>(base + k)), gen);
        });
        for (std::int64_t k = 0; k < n && remaining > 0; ++k) {
            Record& rec = chunk[static_cast<std::size_t>(k)];
            int& q = quota[static_cast<std::size_t>(rec.meta.group_id - 1)];
            if (q > 0) {
                --q;
                --remaining;
                rec.id = static_cast<std::int64_t>(accepted.size());
                accepted.push_back(std::move(rec));
            }
        }
    }
    if (remaining > 0) {
        std::string starved;
        for (int g = 0; g < kGroups; ++g)
            if (quota[static_cast<std::size_t>(g)] > 0) {
                if (!starved.empty()) starved += ",";
                starved += std::to_string(g + 1);
            }
        throw std::runtime_error("draw_test_records: draw budget " + std::to_string(draw_budget) +
                                 " exhausted; starved groups: " + starved);
    }
    return accepted;
}

SplitFiles build_splits(const std::string& out_dir, std::uint64_t master_seed,
                        const SplitSizes& sizes, const InstanceGenConfig& gen,
                        const SimConfig& sim, int workers) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SplitFiles files{(fs::path(out_dir) / "train.jsonl").string(),
                     (fs::path(out_dir) / "val.jsonl").string(),
                     (fs::path(out_dir) / "test.jsonl").string()};

    const auto make_iid = [&](std::uint64_t split_tag, int n) {
        std::vector<Record> recs(static_cast<std::size_t>(n));
        const std::uint64_t split_seed = derive_stream_seed(master_seed, split_tag);
        parallel_for(n, workers, [&](std::int64_t i) {
            recs[static_cast<std::size_t>(i)] =
                generate_record(i, derive_stream_seed(split_seed, static_cast<std::uint64_t>(i)), gen);
        });
        return recs;
    };

    std::vector<Record> train = make_iid(11, sizes.n_train);
    std::vector<Record> val = make_iid(12, sizes.n_val);
    std::vector<Record> test = draw_test_records(derive_stream_seed(master_seed, 13),
                                                 sizes.test_per_group, gen,
                                                 sizes.test_draw_budget, workers);

    label_records(train, sim, derive_stream_seed(master_seed, 21), workers);
    label_records(val, sim, derive_stream_seed(master_seed, 22), workers);
    label_records(test, sim, derive_stream_seed(master_seed, 23), workers);

    write_records_jsonl(files.train, train);
    write_records_jsonl(files.val, val);
    write_records_jsonl(files.test, test);
    return files;
}

DatasetStats dataset_stats(std::span<const Record> records) {
    DatasetStats st;
    st.group_counts.assign(32, 0);
    bool first = true;
    for (const Record& rec : records) {
        ++st.n;
        if (rec.labels) ++st.labeled;
        ++st.group_counts[static_cast<std::size_t>(rec.meta.group_id - 1)];
        for (const MomentVector* mom : {&rec.mom_D, &rec.mom_L}) {
            const double m1 = mom->m[0], m2 = mom->m[1], m3 = mom->m[2], m4 = mom->m[3];
            const double var = m2 - m1 * m1;
            const double scv = var / (m1 * m1);
            const double skew = (m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1) / std::pow(var, 1.5);
            const double kurt =
                (m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1) / (var * var);
            if (first) {
                st.scv_min = st.scv_max = scv;
                st.skew_min = st.skew_max = skew;
                st.kurt_min = st.kurt_max = kurt;
                st.rho_min = st.rho_max = rec.meta.rho;
                first = false;
            }
            st.scv_min = std::min(st.scv_min, scv);
            st.scv_max = std::max(st.scv_max, scv);
            st.skew_min = std::min(st.skew_min, skew);
            st.skew_max = std::max(st.skew_max, skew);
            st.kurt_min = std::min(st.kurt_min, kurt);
            st.kurt_max = std::max(st.kurt_max, kurt);
        }
        st.rho_min = std::min(st.rho_min, rec.meta.rho);
        st.rho_max = std::max(st.rho_max, rec.meta.rho);
    }
    return st;
}

std::string dataset_stats_json(const DatasetStats& st) {
    std::string out = "{\"n\":" + std::to_string(st.n);
    out += ",\"labeled\":" + std::to_string(st.labeled);
    out += ",\"scv\":[" + fmt_double(st.scv_min) + "," + fmt_double(st.scv_max) + "]";
    out += ",\"skewness\":[" + fmt_double(st.skew_min) + "," + fmt_double(st.skew_max) + "]";
    out += ",\"kurtosis\":[" + fmt_double(st.kurt_min) + "," + fmt_double(st.kurt_max) + "]";
    out += ",\"rho\":[" + fmt_double(st.rho_min) + "," + fmt_double(st.rho_max) + "]";
    out += ",\"group_counts\":[";
    for (std::size_t g = 0; g < st.group_counts.size(); ++g) {
        if (g) out += ',';
        out += std::to_string(st.group_counts[g]);
    }
    out += "]}";
    return out;
}

}  // namespace ssinv
