#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "ssinv/mlp.hpp"

namespace ssinv {

/// Mean L1 distance between true and predicted padded PMF rows.
double sae(const Eigen::MatrixXd& P_true, const Eigen::MatrixXd& P_hat);

struct RemResult {
    double mean_abs = 0;     // mean |rel. error of the PMF mean|, percent
    double mean_signed = 0;  // signed companion, percent
    int excluded = 0;        // instances with E[P] <= 1e-9
};
RemResult rem(const Eigen::MatrixXd& P_true, const Eigen::MatrixXd& P_hat);

/// 100 * |EC - EC_hat| / EC.
double re_c(double EC_true, double EC_hat);
/// |pi0 - pi0_hat|.
double ae_pi0(double pi0_true, double pi0_hat);

struct GroupReport {
    int group_id = 0;  // 1..32, 0 = overall
    int n = 0;
    double sae = 0;
    double rem = 0;         // mean-absolute convention
    double rem_signed = 0;
    double re_c = 0;        // group mean, percent
    double ae_pi0 = 0;      // group mean
    int rem_excluded = 0;
};

struct PerInstanceErrors {
    std::vector<double> sae;   // per-record L1
    std::vector<double> re_c;
    std::vector<double> ae;
};

/// Routes records into their 32 segments and aggregates the four metrics;
/// the last entry is the overall row (group_id 0).
std::vector<GroupReport> evaluate_bundles(std::span<const Record> records,
                                          std::span<const PredictionBundle> preds,
                                          PerInstanceErrors* per_instance = nullptr);

/// Runs the model bundle on the records, then aggregates.
std::vector<GroupReport> evaluate(const ModelBundle& bundle, std::span<const Record> records,
                                  PerInstanceErrors* per_instance = nullptr);

/// CSV: group,n,scvD,scvL,rho,S,s,SAE,REM,REc,AEpi0 (+ overall row).
std::string report_csv(std::span<const GroupReport> reports);

/// Single-network validation metric: projected SAE for pmf, median RE_C for
/// cycle, mean AE for fulfill.
double target_metric(const MlpModel& model, TrainTarget target, std::span<const Record> records);

}  // namespace ssinv
