#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <string>
#include <vector>

#include "rmfem/adapt.hpp"
#include "rmfem/bayes.hpp"
#include "rmfem/estimators.hpp"
#include "rmfem/mesh.hpp"

namespace rmfem::io {

inline constexpr const char* kCsvSchema = "# rmfem-csv v1";

const char* library_version();

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Comma-separated table whose first line is the schema comment, then a header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void close();

 private:
  void separator();

  std::ofstream out_;
  std::size_t n_columns_;
  std::size_t in_row_ = 0;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a table written by CsvWriter; throws InvalidArgument with the line number on a schema error.
CsvTable read_csv(const std::filesystem::path& path);

nlohmann::json mesh_to_json(const SimplicialMesh& mesh, const std::vector<double>* values = nullptr);
SimplicialMesh mesh_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EstimatorReport& report);

/// One row per iteration.
void write_adapt_csv(const std::filesystem::path& path, const AdaptResult& result);
/// One row per element per iteration.
void write_estimators_csv(const std::filesystem::path& path, const AdaptResult& result);

/// One row per retained state, burn-in included (flagged in the last column).
void write_chain_csv(const std::filesystem::path& path, const bayes::ChainResult& chain, double burn_in_frac);

nlohmann::json prior_to_json(const bayes::KLPrior& prior);
nlohmann::json observations_to_json(const bayes::ObservationSet& obs);
nlohmann::json summary_to_json(const bayes::PosteriorSummary& summary);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace rmfem::io
