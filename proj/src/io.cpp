#include "flpre/io.hpp"

#include "flpre/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace flpre {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  double value = 0.0;
  const char* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw DataError(where(path, line) + "cannot parse number '" + field + "'");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

void expect_header(std::istream& in, const std::vector<std::string>& columns, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file, header row required");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (split(line) != columns) {
    std::string expected;
    for (const auto& c : columns) expected += (expected.empty() ? "" : ",") + c;
    throw DataError(where(path, 1) + "expected header '" + expected + "'");
  }
}

void put(std::ostream& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, ptr - buf);
}

}  // namespace

Vector FunctionalDataset::responses() const {
  Vector y(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].response) throw DataError("curve '" + ids[i] + "' has no response");
    y[static_cast<Eigen::Index>(i)] = *samples[i].response;
  }
  return y;
}

bool FunctionalDataset::has_responses() const {
  return !samples.empty() &&
         std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.response.has_value(); });
}

FunctionalDataset read_functional_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  expect_header(in, {"id", "t", "x"}, path);

  FunctionalDataset data;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<std::pair<double, double>>> points;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 3) throw DataError(where(path, line_no) + "expected 3 columns");
    const double t = parse_double(fields[1], path, line_no);
    const double x = parse_double(fields[2], path, line_no);
    if (!(t >= 0.0 && t <= 1.0)) throw DataError(where(path, line_no) + "t outside [0, 1]");
    if (!std::isfinite(x)) throw DataError(where(path, line_no) + "non-finite curve value");
    auto [it, inserted] = slot.try_emplace(fields[0], data.ids.size());
    if (inserted) {
      data.ids.push_back(fields[0]);
      points.emplace_back();
    }
    points[it->second].emplace_back(t, x);
  }
  if (data.ids.empty()) throw DataError(path.string() + ": no curves");
  data.samples.resize(data.ids.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& pts = points[i];
    std::sort(pts.begin(), pts.end());
    auto& sample = data.samples[i];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k > 0 && pts[k].first == pts[k - 1].first) {
        throw DataError(path.string() + ": curve '" + data.ids[i] + "' repeats t=" + std::to_string(pts[k].first));
      }
      sample.grid.push_back(pts[k].first);
      sample.values.push_back(pts[k].second);
    }
    if (sample.grid.size() < 2) throw DataError(path.string() + ": curve '" + data.ids[i] + "' has fewer than 2 points");
  }
  return data;
}

void read_responses_csv(const std::filesystem::path& path, FunctionalDataset& dataset, bool required) {
  std::ifstream in = open_input(path);
  expect_header(in, {"id", "y"}, path);
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < dataset.ids.size(); ++i) slot.emplace(dataset.ids[i], i);
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 2) throw DataError(where(path, line_no) + "expected 2 columns");
    const double y = parse_double(fields[1], path, line_no);
    if (!(y > 0.0) || !std::isfinite(y)) throw DataError(where(path, line_no) + "response must be strictly positive");
    const auto it = slot.find(fields[0]);
    if (it == slot.end()) throw DataError(where(path, line_no) + "unknown curve id '" + fields[0] + "'");
    dataset.samples[it->second].response = y;
  }
  if (required) {
    for (std::size_t i = 0; i < dataset.ids.size(); ++i) {
      if (!dataset.samples[i].response) {
        throw DataError(path.string() + ": no response for curve '" + dataset.ids[i] + "'");
      }
    }
  }
}

void write_functional_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                          const CurveBatch& curves) {
  std::ofstream out = open_output(path);
  out << "id,t,x\n";
  for (Eigen::Index i = 0; i < curves.size(); ++i) {
    for (std::size_t g = 0; g < curves.grid.size(); ++g) {
      out << ids[i] << ',';
      put(out, curves.grid[g]);
      out << ',';
      put(out, curves.values(i, static_cast<Eigen::Index>(g)));
      out << '\n';
    }
  }
  if (!out) throw UsageError("failed writing " + path.string());
}

void write_responses_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                         const Vector& responses) {
  std::ofstream out = open_output(path);
  out << "id,y\n";
  for (Eigen::Index i = 0; i < responses.size(); ++i) {
    out << ids[i] << ',';
    put(out, responses[i]);
    out << '\n';
  }
  if (!out) throw UsageError("failed writing " + path.string());
}

void write_scheme_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                      const SubsampleScheme& scheme) {
  std::ofstream out = open_output(path);
  out << "id,pi\n";
  for (Eigen::Index i = 0; i < scheme.probabilities.size(); ++i) {
    out << ids[i] << ',';
    put(out, scheme.probabilities[i]);
    out << '\n';
  }
  if (!out) throw UsageError("failed writing " + path.string());
}

void write_beta_csv(const std::filesystem::path& path, const BetaCurve& curve) {
  std::ofstream out = open_output(path);
  const bool bands = !curve.se.empty();
  out << (bands ? "t,beta,se,lower,upper\n" : "t,beta\n");
  for (std::size_t k = 0; k < curve.t.size(); ++k) {
    put(out, curve.t[k]);
    out << ',';
    put(out, curve.beta[k]);
    if (bands) {
      for (double v : {curve.se[k], curve.lower[k], curve.upper[k]}) {
        out << ',';
        put(out, v);
      }
    }
    out << '\n';
  }
  if (!out) throw UsageError("failed writing " + path.string());
}

std::string model_to_json(const ModelRecord& model) {
  json doc;
  doc["version"] = kModelVersion;
  doc["method"] = to_string(model.fit.method);
  doc["degree"] = model.basis.degree;
  doc["penalty_order"] = model.basis.penalty_order;
  doc["interior_knots"] = model.basis.interior_knots;
  doc["knot_vector"] = model.basis.knots;
  doc["theta"] = std::vector<double>(model.fit.theta.data(), model.fit.theta.data() + model.fit.theta.size());
  doc["lambda"] = model.fit.lambda;
  doc["converged"] = model.fit.converged;
  doc["n"] = model.fit.n;
  doc["loss"] = model.fit.loss;
  return doc.dump(2);
}

ModelRecord model_from_json(const std::string& text) {
  ModelRecord model;
  try {
    const json doc = json::parse(text);
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) throw DataError("unsupported model version " + std::to_string(version));
    model.basis = make_basis(doc.at("interior_knots").get<int>(), doc.at("degree").get<int>(),
                             doc.at("penalty_order").get<int>());
    const auto knots = doc.at("knot_vector").get<std::vector<double>>();
    if (knots != model.basis.knots) throw DataError("model knot vector disagrees with its basis settings");
    const auto theta = doc.at("theta").get<std::vector<double>>();
    if (static_cast<int>(theta.size()) != model.basis.dimension()) {
      throw DataError("model theta length does not match the basis dimension");
    }
    model.fit.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    model.fit.method = method_from_string(doc.value("method", std::string("FLPRE")));
    model.fit.lambda = doc.at("lambda").get<double>();
    model.fit.converged = doc.at("converged").get<bool>();
    model.fit.n = doc.at("n").get<Eigen::Index>();
    model.fit.loss = doc.at("loss").get<double>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const ModelRecord& model) {
  std::ofstream out = open_output(path);
  out << model_to_json(model) << '\n';
  if (!out) throw UsageError("failed writing " + path.string());
}

ModelRecord load_model(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

std::vector<std::string> sequential_ids(Eigen::Index n) {
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = std::to_string(i);
  return ids;
}

}  // namespace flpre
