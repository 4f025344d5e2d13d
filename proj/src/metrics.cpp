#include "ssinv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssinv/json_util.hpp"

namespace ssinv {

namespace {

double pmf_row_mean(const Eigen::RowVectorXd& row) {
    double m = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j) m += static_cast<double>(j) * row[j];
    return m;
}

}  // namespace

double sae(const Eigen::MatrixXd& P_true, const Eigen::MatrixXd& P_hat) {
    if (P_true.rows() != P_hat.rows() || P_true.cols() != P_hat.cols())
        throw std::invalid_argument("sae: shape mismatch");
    if (P_true.rows() == 0) throw std::invalid_argument("sae: empty input");
    return (P_true - P_hat).cwiseAbs().sum() / static_cast<double>(P_true.rows());
}

RemResult rem(const Eigen::MatrixXd& P_true, const Eigen::MatrixXd& P_hat) {
    if (P_true.rows() != P_hat.rows() || P_true.cols() != P_hat.cols())
        throw std::invalid_argument("rem: shape mismatch");
    RemResult out;
    double abs_sum = 0, signed_sum = 0;
    int used = 0;
    for (Eigen::Index i = 0; i < P_true.rows(); ++i) {
        const double mean_true = pmf_row_mean(P_true.row(i));
        if (mean_true <= 1e-9) {
            ++out.excluded;
            continue;
        }
        const double rel = (mean_true - pmf_row_mean(P_hat.row(i))) / mean_true;
        abs_sum += std::abs(rel);
        signed_sum += rel;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("rem: all instances excluded");
    out.mean_abs = 100.0 * abs_sum / used;
    out.mean_signed = 100.0 * signed_sum / used;
    return out;
}

double re_c(double EC_true, double EC_hat) {
    if (!(EC_true > 0)) throw std::invalid_argument("re_c: EC_true must be > 0");
    return 100.0 * std::abs(EC_true - EC_hat) / EC_true;
}

double ae_pi0(double pi0_true, double pi0_hat) { return std::abs(pi0_true - pi0_hat); }

std::vector<GroupReport> evaluate_bundles(std::span<const Record> records,
                                          std::span<const PredictionBundle> preds,
                                          PerInstanceErrors* per_instance) {
    if (records.size() != preds.size())
        throw std::invalid_argument("evaluate_bundles: record/prediction count mismatch");
    constexpr int kGroups = 32;

    struct Acc {
        int n = 0;
        double sae_sum = 0, rec_sum = 0, ae_sum = 0;
        double rem_abs_sum = 0, rem_signed_sum = 0;
        int rem_used = 0, rem_excluded = 0;
    };
    std::vector<Acc> acc(kGroups + 1);  // [0] = overall

    if (per_instance) {
        per_instance->sae.clear();
        per_instance->re_c.clear();
        per_instance->ae.clear();
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        const Record& rec = records[i];
        if (!rec.labels) throw std::invalid_argument("evaluate_bundles: record lacks labels");
        const PredictionBundle& pb = preds[i];
        const int g = segment_group(rec);

        double l1 = 0;
        double mean_true = 0, mean_hat = 0;
        for (int j = 0; j < kPmfPad; ++j) {
            const double pt = rec.labels->P[static_cast<std::size_t>(j)];
            const double ph = pb.P_hat[j];
            l1 += std::abs(pt - ph);
            mean_true += j * pt;
            mean_hat += j * ph;
        }
        const double rec_err = re_c(rec.labels->EC, pb.EC_hat);
        const double ae = ae_pi0(rec.labels->pi0, pb.pi0_hat);

        for (Acc* a : {&acc[0], &acc[static_cast<std::size_t>(g)]}) {
            a->n += 1;
            a->sae_sum += l1;
            a->rec_sum += rec_err;
            a->ae_sum += ae;
            if (mean_true <= 1e-9) {
                a->rem_excluded += 1;
            } else {
                const double rel = (mean_true - mean_hat) / mean_true;
                a->rem_abs_sum += std::abs(rel);
                a->rem_signed_sum += rel;
                a->rem_used += 1;
            }
        }
        if (per_instance) {
            per_instance->sae.push_back(l1);
            per_instance->re_c.push_back(rec_err);
            per_instance->ae.push_back(ae);
        }
    }

    std::vector<GroupReport> reports;
    for (int g = 1; g <= kGroups; ++g) {
        const Acc& a = acc[static_cast<std::size_t>(g)];
        if (a.n == 0) continue;
        GroupReport r;
        r.group_id = g;
        r.n = a.n;
        r.sae = a.sae_sum / a.n;
        r.re_c = a.rec_sum / a.n;
        r.ae_pi0 = a.ae_sum / a.n;
        r.rem = a.rem_used ? 100.0 * a.rem_abs_sum / a.rem_used : 0.0;
        r.rem_signed = a.rem_used ? 100.0 * a.rem_signed_sum / a.rem_used : 0.0;
        r.rem_excluded = a.rem_excluded;
        reports.push_back(r);
    }
    const Acc& a = acc[0];
    if (a.n > 0) {
        GroupReport r;
        r.group_id = 0;
        r.n = a.n;
        r.sae = a.sae_sum / a.n;
        r.re_c = a.rec_sum / a.n;
        r.ae_pi0 = a.ae_sum / a.n;
        r.rem = a.rem_used ? 100.0 * a.rem_abs_sum / a.rem_used : 0.0;
        r.rem_signed = a.rem_used ? 100.0 * a.rem_signed_sum / a.rem_used : 0.0;
        r.rem_excluded = a.rem_excluded;
        reports.push_back(r);
    }
    return reports;
}

std::vector<GroupReport> evaluate(const ModelBundle& bundle, std::span<const Record> records,
                                  PerInstanceErrors* per_instance) {
    const Eigen::MatrixXd X = feature_matrix(records, bundle.pmf.n_D, bundle.pmf.n_L);
    const std::vector<PredictionBundle> preds = predict(bundle, X);
    return evaluate_bundles(records, preds, per_instance);
}

double target_metric(const MlpModel& model, TrainTarget target, std::span<const Record> records) {
    if (records.empty()) throw std::invalid_argument("target_metric: empty record set");
    const Eigen::MatrixXd X = feature_matrix(records, model.n_D, model.n_L);
    const Eigen::MatrixXd Y = forward(model, X);
    switch (target) {
        case TrainTarget::kPmf: {
            double total = 0;
            for (Eigen::Index i = 0; i < Y.rows(); ++i) {
                const Eigen::VectorXd proj =
                    project_support(Y.row(i).transpose(), records[static_cast<std::size_t>(i)].inst.S);
                const auto& P = records[static_cast<std::size_t>(i)].labels->P;
                for (int j = 0; j < kPmfPad; ++j)
                    total += std::abs(P[static_cast<std::size_t>(j)] - proj[j]);
            }
            return total / static_cast<double>(Y.rows());
        }
        case TrainTarget::kCycle: {
            std::vector<double> errs;
            for (Eigen::Index i = 0; i < Y.rows(); ++i) {
                const double ec_hat = model.log_target ? std::exp(Y(i, 0)) : Y(i, 0);
                errs.push_back(re_c(records[static_cast<std::size_t>(i)].labels->EC, ec_hat));
            }
            std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
            return errs[errs.size() / 2];
        }
        case TrainTarget::kFulfill: {
            double total = 0;
            for (Eigen::Index i = 0; i < Y.rows(); ++i) {
                const double pi0_hat = 1.0 - std::clamp(Y(i, 0), 1e-7, 1.0 - 1e-7);
                total += ae_pi0(records[static_cast<std::size_t>(i)].labels->pi0, pi0_hat);
            }
            return total / static_cast<double>(Y.rows());
        }
    }
    throw std::logic_error("target_metric: bad target");
}

std::string report_csv(std::span<const GroupReport> reports) {
    std::string out = "group,n,scvD,scvL,rho,S,s,SAE,REM,REc,AEpi0\n";
    for (const GroupReport& r : reports) {
        if (r.group_id == 0) {
            out += "overall," + std::to_string(r.n) + ",-,-,-,-,-,";
        } else {
            const int bits = r.group_id - 1;
            out += std::to_string(r.group_id) + "," + std::to_string(r.n) + ",";
            out += (bits & 16) ? ">5," : "<=5,";
            out += (bits & 8) ? ">5," : "<=5,";
            out += (bits & 4) ? ">1," : "<=1,";
            out += (bits & 2) ? ">15," : "<=15,";
            out += (bits & 1) ? "large," : "small,";
        }
        out += fmt_double(r.sae) + "," + fmt_double(r.rem) + "," + fmt_double(r.re_c) + "," +
               fmt_double(r.ae_pi0) + "\n";
    }
    return out;
}

}  // namespace ssinv
