#include "rmfem/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace rmfem::io {

const char* library_version() { return "0.1.0"; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), n_columns_(columns.size()) {
  if (!out_) throw InvalidArgument("cannot open " + path.string() + " for writing");
  if (columns.empty()) throw InvalidArgument("CSV needs at least one column");
  out_ << kCsvSchema << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::separator() {
  if (in_row_ == n_columns_) throw InvalidArgument("too many CSV fields in a row");
  if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::operator<<(double v) {
  separator();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  separator();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  if (v.find_first_of(",\n\"") != std::string::npos) throw InvalidArgument("CSV field needs quoting: " + v);
  separator();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != n_columns_) throw InvalidArgument("CSV row has too few fields");
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw InvalidArgument("failed to write CSV file");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvSchema)
    throw InvalidArgument(path.string() + ":1: missing '" + std::string(kCsvSchema) + "' header");
  CsvTable t;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ":2: missing column header");
  t.columns = split(line);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    auto cells = split(line);
    if (cells.size() != t.columns.size())
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(t.columns.size()) + " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

nlohmann::json mesh_to_json(const SimplicialMesh& mesh, const std::vector<double>* values) {
  nlohmann::json j;
  j["dim"] = mesh.dim();
  auto& v = j["vertices"] = nlohmann::json::array();
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    const Point p = mesh.vertex(i);
    if (mesh.dim() == 1)
      v.push_back(nlohmann::json::array({p.x}));
    else
      v.push_back(nlohmann::json::array({p.x, p.y}));
  }
  auto& e = j["elements"] = nlohmann::json::array();
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto el = mesh.element(k);
    e.push_back(std::vector<Index>(el.begin(), el.end()));
  }
  auto& b = j["boundary_mask"] = nlohmann::json::array();
  for (Index i = 0; i < mesh.n_vertices(); ++i) b.push_back(mesh.on_boundary(i) ? 1 : 0);
  if (values) {
    if (values->size() != static_cast<std::size_t>(mesh.n_vertices()))
      throw InvalidArgument("one value per vertex required");
    j["values"] = *values;
  }
  return j;
}

SimplicialMesh mesh_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    std::vector<Point> vertices;
    for (const auto& v : j.at("vertices")) vertices.push_back({v.at(0).get<double>(), dim == 2 ? v.at(1).get<double>() : 0.0});
    std::vector<Index> elements;
    for (const auto& e : j.at("elements"))
      for (const auto& i : e) elements.push_back(i.get<Index>());
    return SimplicialMesh::from_data(dim, std::move(vertices), std::move(elements));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed mesh JSON: ") + e.what());
  }
}

nlohmann::json report_to_json(const EstimatorReport& report) {
  return {{"kind", to_string(report.kind)},
          {"local", report.local},
          {"global", report.global},
          {"n_realizations", report.n_realizations},
          {"normalized", report.normalized}};
}

void write_adapt_csv(const std::filesystem::path& path, const AdaptResult& result) {
  std::vector<std::string> cols = {"iteration", "n_elements", "estimator", "estimator_sq_std_error",
                                   "true_error", "solution_norm", "effectivity", "gamma_loc",
                                   "n_refined", "n_coarsened"};
  if (!result.iterations.empty())
    for (const auto& [kind, value] : result.iterations.front().companions) cols.push_back("companion_" + to_string(kind));
  CsvWriter w(path, cols);
  for (const AdaptIteration& it : result.iterations) {
    w << it.iteration << static_cast<long long>(it.n_elements) << it.estimator << it.estimator_sq_std_error
      << it.true_error << it.solution_norm << it.effectivity << it.gamma_loc << it.refined.size()
      << it.coarsened.size();
    for (const auto& c : it.companions) w << c.second;
    w.end_row();
  }
  w.close();
}

void write_estimators_csv(const std::filesystem::path& path, const AdaptResult& result) {
  CsvWriter w(path, {"iteration", "element", "centroid_x", "centroid_y", "diameter", "eta", "refined"});
  for (const AdaptIteration& it : result.iterations) {
    std::vector<char> marked(it.mesh->n_elements(), 0);
    for (Index k : it.refined) marked[k] = 1;
    for (Index k = 0; k < it.mesh->n_elements(); ++k) {
      const Point c = it.mesh->centroid(k);
      w << it.iteration << static_cast<long long>(k) << c.x << c.y << it.mesh->element_diam(k) << it.local[k]
        << static_cast<int>(marked[k]);
      w.end_row();
    }
  }
  w.close();
}

void write_chain_csv(const std::filesystem::path& path, const bayes::ChainResult& chain, double burn_in_frac) {
  std::vector<std::string> cols = {"step"};
  for (std::size_t i = 0; i < chain.dim; ++i) cols.push_back("xi_" + std::to_string(i + 1));
  cols.push_back("burn_in");
  CsvWriter w(path, cols);
  const std::size_t n = chain.n_samples();
  const std::size_t skip = static_cast<std::size_t>(std::floor(burn_in_frac * n));
  for (std::size_t s = 0; s < n; ++s) {
    w << s;
    for (double v : chain.sample(s)) w << v;
    w << static_cast<int>(s < skip);
    w.end_row();
  }
  w.close();
}

nlohmann::json prior_to_json(const bayes::KLPrior& prior) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : prior.modes()) modes.push_back({{"lambda", m.lambda}, {"j", m.j}, {"k", m.k}});
  return {{"dim", prior.dim()}, {"alpha", prior.alpha_exp()}, {"n_kl", prior.n_kl()}, {"modes", modes}};
}

nlohmann::json observations_to_json(const bayes::ObservationSet& obs) {
  nlohmann::json pts = nlohmann::json::array();
  for (Point p : obs.points) pts.push_back({p.x, p.y});
  return {{"points", pts}, {"values", obs.values}, {"noise_var", obs.noise_var}};
}

nlohmann::json summary_to_json(const bayes::PosteriorSummary& s) {
  nlohmann::json j = {{"n_samples", s.n_samples},
                      {"xi_mean", s.xi_mean},
                      {"xi_std", s.xi_std},
                      {"xi_std_norm", s.xi_std_norm()}};
  if (s.grid) {
    j["grid"] = mesh_to_json(*s.grid);
    j["kappa_mean"] = s.kappa_mean;
    j["kappa_std"] = s.kappa_std;
  }
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InvalidArgument("failed to write " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

}  // namespace rmfem::io
