#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsact/data.hpp"
#include "nsact/expr.hpp"
#include "nsact/gp.hpp"
#include "nsact/metrics.hpp"
#include "nsact/nn.hpp"

namespace nsact::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr std::uint64_t kDiscoverySeed = 42;
inline constexpr double kDiscoveryFraction = 0.1;
inline constexpr double kTrainFraction = 0.8;

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Precision { F32, F64 };
std::string precision_name(Precision p);
Precision parse_precision(const std::string& name);

// ---------------------------------------------------------------------------
// Formula files: line 1 holds the raw formula; `<path>.json` holds the rest.

struct FormulaRecord {
  std::string raw;
  std::string generalized;
  std::string source;
  std::int64_t discovery_seed = static_cast<std::int64_t>(kDiscoverySeed);
  std::optional<gp::GpConfig> gp;
  gp::EvolutionHistory history;
  bool pair_collapsed = false;
};

nlohmann::json to_json(const gp::GpConfig& cfg);
gp::GpConfig gp_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FormulaRecord& r);
FormulaRecord formula_record_from_json(const nlohmann::json& j);

std::filesystem::path sidecar_path(const std::filesystem::path& formula_file);

void write_formula_file(const std::filesystem::path& path, const FormulaRecord& record);

/// Reads line 1, re-derives the generalized form and merges sidecar metadata if present.
/// Throws HarnessError for a missing or unparsable file.
FormulaRecord read_formula_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Experiments

struct DatasetRef {
  std::string path;
  std::string label = "last";
  std::string name;
  std::string preparation;  // free text, e.g. how a multi-class label was binarized
};

struct ActivationSource {
  enum class Kind { Builtin, Specialist, Transfer };
  Kind kind = Kind::Builtin;
  std::string builtin = "relu";
  std::string formula_path;
  std::string source_name;  // transfer only

  static ActivationSource from_builtin(const std::string& name);
  static ActivationSource specialist(const std::string& path);
  static ActivationSource transfer(const std::string& path, const std::string& source_name);

  /// "ReLU", "GELU", "SiLU", "Hybrid (Specialist)", "Hybrid (Transfer)".
  std::string label() const;
};

struct TrainOverrides {
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
};

struct ExperimentSpec {
  DatasetRef dataset;
  nn::Arch arch = nn::Arch::Light;
  ActivationSource activation;
  std::vector<std::int64_t> seeds{42, 43, 44};
  TrainOverrides overrides;
  Precision precision = Precision::F32;

  /// Throws HarnessError if a referenced formula file is missing or invalid.
  void validate() const;
};

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

/// Resolves an activation source; symbolic sources are generalized at load time.
nn::Activation resolve_activation(const ActivationSource& src);

struct SeedRun {
  metrics::EvalResult result;
  std::string test_rows_hash;  // FNV-1a over the original test-row indices
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::vector<double> epoch_loss;
};

struct RunRecord {
  int schema_version = kSchemaVersion;
  std::string library_version = kLibraryVersion;
  ExperimentSpec spec;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
  std::vector<SeedRun> seeds;
  metrics::Aggregate aggregate;
  double wall_seconds = 0.0;
  nlohmann::json resolved;  // every default the protocol leaves open
  std::optional<FormulaRecord> formula;
};

nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Defaults recorded in every run, given the training configuration actually used.
nlohmann::json resolved_defaults(const nn::TrainConfig& train, Precision precision);

nn::TrainConfig train_config_for(const TrainOverrides& o, std::int64_t seed);

std::string hash_indices(const std::vector<std::size_t>& rows);

/// Rows left after removing the discovery subset (always drawn with the discovery seed).
std::vector<std::size_t> protocol_remainder(const data::Dataset& d);

struct ProtocolSplit {
  std::vector<std::size_t> train;  // indices into the original dataset
  std::vector<std::size_t> test;
};
ProtocolSplit protocol_split(const data::Dataset& d, std::int64_t seed);

/// Trains and evaluates one seed on an already loaded dataset.
SeedRun run_seed(const data::Dataset& d, const ExperimentSpec& spec, const nn::Activation& act,
                 std::int64_t seed);

/// All seeds of `spec` on a loaded dataset. Failures propagate.
RunRecord run_experiment(const data::Dataset& d, const ExperimentSpec& spec);

/// Loads the dataset, runs, and writes the record to `out` when non-empty.
RunRecord cmd_train(const ExperimentSpec& spec, const std::string& out);

// ---------------------------------------------------------------------------
// Discovery

struct DiscoverOptions {
  DatasetRef dataset;
  double fraction = kDiscoveryFraction;
  std::uint64_t seed = kDiscoverySeed;
  gp::GpConfig gp{};
  std::string out;
};

/// The dataset-level half of discovery: subset, scale, evolve.
FormulaRecord discover(const data::Dataset& d, const DiscoverOptions& opts);

FormulaRecord cmd_discover(const DiscoverOptions& opts);

// ---------------------------------------------------------------------------
// Benchmark

struct ModelEntry {
  std::string id;
  nn::Arch arch = nn::Arch::Light;
  std::string activation;  // relu|gelu|silu|specialist|transfer
};

struct DatasetEntry {
  std::string id;
  DatasetRef ref;
  std::string specialist;       // formula path, may be empty
  std::string transfer;         // formula path, may be empty
  std::string transfer_source;  // display name of the transfer source
};

struct BenchmarkConfig {
  std::vector<std::int64_t> seeds{42, 43, 44};
  TrainOverrides overrides;
  Precision precision = Precision::F32;
  std::vector<DatasetEntry> datasets;
  std::vector<ModelEntry> models;  // defaults to the standard six-model grid
};

std::vector<ModelEntry> default_model_grid();

/// INI-style file. Throws HarnessError on unknown sections or keys.
BenchmarkConfig parse_benchmark_config(std::istream& in, const std::filesystem::path& base_dir = {});
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);

struct BenchmarkResult {
  std::vector<RunRecord> records;
  std::size_t training_runs = 0;  // seeds actually trained
  std::size_t skipped_cells = 0;  // model needs a formula the dataset does not configure
};

/// Runs the grid; a failing cell is recorded with status "failed".
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

/// Runs, writes one JSON per cell under out_dir/runs and the rendered reports.
BenchmarkResult cmd_benchmark(const std::filesystem::path& config, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Markdown, Csv, Json };
ReportFormat parse_report_format(const std::string& name);

struct ReportRow {
  std::string dataset;
  std::string architecture;
  std::string activation;
  metrics::Aggregate aggregate;
  std::string status;
};

struct SummaryRow {
  std::string dataset;
  double heavy_efficiency = 0.0;
  double light_efficiency = 0.0;
  std::string light_label;
  metrics::Improvement improvement;
};

/// Rows grouped by dataset (first appearance), each group sorted by efficiency ascending.
std::vector<ReportRow> report_rows(const std::vector<RunRecord>& records);

/// Best Light row against the Heavy ReLU row, per dataset that has both.
std::vector<SummaryRow> summary_rows(const std::vector<RunRecord>& records);

std::string format_count(std::size_t n);  // 26601 -> "26,601"
std::string format_fixed(double v, int digits = 3);

std::string render_markdown(const std::vector<RunRecord>& records);
std::string render_csv(const std::vector<RunRecord>& records);
std::string render_json(const std::vector<RunRecord>& records);
std::string render(const std::vector<RunRecord>& records, ReportFormat format);

/// Accepts single-record files and rendered JSON reports. Throws on mixed schema versions.
std::vector<RunRecord> load_records(const std::vector<std::filesystem::path>& paths);
std::vector<RunRecord> records_from_json(const nlohmann::json& j);

void cmd_report(const std::vector<std::filesystem::path>& inputs, ReportFormat format,
                const std::string& out);

// ---------------------------------------------------------------------------
// Curves and gradient checks

struct CurveColumn {
  std::string name;
  nn::Activation activation;
};

/// "relu" / "gelu" / "silu", "formula:PATH", or an inline variable-only formula.
/// Feature-indexed formulas are rejected with a hint to generalize them.
CurveColumn resolve_curve(const std::string& spec);

struct CurveTable {
  std::vector<double> x;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> derivatives;
};

CurveTable curves(const std::vector<CurveColumn>& columns, double lo = -5.0, double hi = 5.0,
                  double step = 0.05);

/// Sign changes of a sampled sequence, ignoring exact zeros.
std::size_t sign_changes(const std::vector<double>& v);

void write_curves_csv(const CurveTable& t, std::ostream& out);

struct GradcheckCase {
  std::string arch;
  std::string activation;
  std::int64_t seed = 0;
  nn::GradcheckReport report;
};

/// Both architectures at widths 8 -> 4, relu/gelu/silu and the three reference
/// symbolic activations, on a random 32-row batch.
std::vector<GradcheckCase> gradcheck_suite(std::int64_t seed, Precision precision = Precision::F64,
                                           const nn::GradientFn& analytic = {});

/// Prints one line per parameter group; returns true iff every group passes.
bool cmd_gradcheck(std::int64_t seed, Precision precision, std::ostream& out);

/// The three reference generalized activations, keyed by short name.
std::vector<std::pair<std::string, expr::Formula>> reference_activations();

}  // namespace nsact::harness
