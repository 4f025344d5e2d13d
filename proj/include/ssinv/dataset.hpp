#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssinv/phase_type.hpp"
#include "ssinv/simulate.hpp"

namespace ssinv {

inline constexpr int kStoredMoments = 10;

struct RecordMeta {
    double scv_D = 0;
    double scv_L = 0;
    double rho = 0;
    int group_id = 0;
    std::uint64_t seed = 0;
};

struct Record {
    std::int64_t id = 0;
    SystemInstance inst;
    MomentVector mom_D;  // kStoredMoments raw moments of D
    MomentVector mom_L;
    std::optional<Labels> labels;
    RecordMeta meta;
};

struct InstanceGenConfig {
    int S_max = 30;
    PhGenConfig ph;
};

/// One (s,S,D,L) draw: S uniform on {1..S_max}, s uniform on {0..S-1},
/// D rescaled to mean 1, L rescaled to mean 1/r with lead rate
/// r ~ Uniform(0.1, 10), so rho = m_L^1.
SystemInstance generate_instance(Rng& rng, const InstanceGenConfig& cfg);

/// Instance plus stored moments and meta; rng state fully derived from seed.
Record generate_record(std::int64_t id, std::uint64_t seed, const InstanceGenConfig& cfg);

/// Table-1 test-set cell in 1..32:
/// 16*[scv_D>5] + 8*[scv_L>5] + 4*[rho>1] + 2*[S>15] + [s>floor(S/2)] + 1.
int segment_group(double scv_D, double scv_L, double rho, int S, int s);
int segment_group(const Record& rec);

/// [s, S, ln m_D^1..ln m_D^{n_D}, ln m_L^1..ln m_L^{n_L}].
/// Throws std::invalid_argument on a nonpositive moment.
std::vector<double> feature_vector(int s, int S, std::span<const double> mom_D,
                                   std::span<const double> mom_L, int n_D, int n_L);
std::vector<double> feature_vector(const Record& rec, int n_D, int n_L);

/// JSONL, one record per line; floats carry 17 significant digits so equal
/// seeds reproduce byte-identical files.
std::string record_to_json(const Record& rec);
Record record_from_json(const std::string& line, bool keep_ph = true);
void write_records_jsonl(const std::string& path, std::span<const Record> records);
/// keep_ph=false drops the subgenerator matrices after parsing (features and
/// labels survive); use for training-size files.
std::vector<Record> read_records_jsonl(const std::string& path, bool keep_ph = true);

/// Labels every record in place. Per-record simulation seed is
/// derive_stream_seed(label_seed, record id); worker count never changes
/// the output.
void label_records(std::span<Record> records, const SimConfig& base_cfg,
                   std::uint64_t label_seed, int workers);

struct SplitSizes {
    int n_train = 0;
    int n_val = 0;
    int test_per_group = 0;               // 32 groups
    std::int64_t test_draw_budget = 0;    // 0 -> auto
};

struct SplitFiles {
    std::string train;
    std::string val;
    std::string test;
};

/// Generates, labels and writes train/val/test JSONL files under out_dir.
/// Train/val are i.i.d.; test fills each of the 32 groups to quota by
/// rejection and throws (naming the starved groups) if the draw budget runs
/// out. Deterministic in master_seed.
SplitFiles build_splits(const std::string& out_dir, std::uint64_t master_seed,
                        const SplitSizes& sizes, const InstanceGenConfig& gen,
                        const SimConfig& sim, int workers);

/// Draws test-style records (rejection into group quotas) without labeling.
std::vector<Record> draw_test_records(std::uint64_t seed, int per_group,
                                      const InstanceGenConfig& gen, std::int64_t draw_budget,
                                      int workers);

/// Shape summary of a record stream: SCV/skewness/kurtosis ranges and group
/// occupancy (the generator's statistics output).
struct DatasetStats {
    std::int64_t n = 0;
    double scv_min = 0, scv_max = 0;
    double skew_min = 0, skew_max = 0;
    double kurt_min = 0, kurt_max = 0;
    double rho_min = 0, rho_max = 0;
    std::int64_t labeled = 0;
    std::vector<std::int64_t> group_counts;  // 32
};
DatasetStats dataset_stats(std::span<const Record> records);
std::string dataset_stats_json(const DatasetStats& st);

}  // namespace ssinv
