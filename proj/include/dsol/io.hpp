#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsol/multisoliton.hpp"

namespace dsol {

enum class Mode { groundstate, spectrum, evolve, shoot, norm_equiv, verify };

std::optional<Mode> parse_mode(std::string_view name);
std::string mode_name(Mode m);

struct GridSpec {
  double half_length = 0.0;
  std::size_t n_points = 0;
  Grid grid() const { return Grid(half_length, n_points); }
};

struct PhysicsSpec {
  double p = 7.0;
  double gamma = -1.0;
};

struct EvolveSpec {
  EvolutionConfig cfg;
  double t0 = 0.0, t1 = 0.0;
  // start from a checkpoint instead of the profile at t0 (t0 then comes from the file)
  std::optional<std::string> initial_checkpoint;
};

struct SpectrumSpec {
  int coercivity_trials = 0;
};

struct NormEquivSpec {
  std::vector<double> s{0.25, 0.6, 1.0, 1.4};
  std::vector<double> gamma{-1.0, 1.0};
  int quad_nodes = 201;
};

// Sections a mode does not use are rejected, as are unknown keys. Soliton
// entries may come in any order; they are sorted by velocity.
struct ExperimentConfig {
  Mode mode = Mode::groundstate;
  std::optional<GridSpec> grid;
  std::optional<PhysicsSpec> physics;
  std::optional<ProfileParams> profile;
  std::optional<EvolveSpec> evolution;
  std::optional<ShootingConfig> shooting;
  std::optional<SpectrumSpec> spectrum;
  std::optional<NormEquivSpec> frac;
  std::uint64_t seed = 1;
  std::string output_dir = "run";
  std::string canonical;  // sorted-key JSON of the document, output_dir removed

  std::uint64_t hash() const;
};

// Throws ConfigError with every problem found; syntax errors carry line:column.
// mode_override and seed_override replace the document's values; a document
// "mode" that disagrees with mode_override is an error.
ExperimentConfig parse_config(std::string_view text, std::optional<Mode> mode_override = {},
                              std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Mode> mode_override = {},
                             std::optional<std::uint64_t> seed_override = {});

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

// %.17g, "." decimal point regardless of locale
std::string format_real(double x);

// Comma separated, LF line endings, first line "# config_hash=<hex>".
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

// "DSOL", u32 version, f64 R, u64 n, f64 t, u64 config hash, then n (re, im)
// pairs; everything little endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  double t = 0.0;
  std::uint64_t config_hash = 0;
  GridFunction u;
};
void write_checkpoint(const std::filesystem::path& path, double t, const GridFunction& u, std::uint64_t config_hash);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace dsol
