#include "fadekit/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fadekit/errors.hpp"

namespace fadekit {

namespace {

// Runs f, turning JSON access errors into ParseError.
template <class F>
auto guarded(const char* what, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

void require_object(const Json& j, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected a JSON object");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + s + "'");
  }
}

int parse_int(const std::string& s) {
  const double v = parse_double(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError("bad integer '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

Json number_to_json(double x) {
  if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
  if (std::isnan(x)) return Json("nan");
  return Json(x);
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ParseError("expected a number or \"inf\", got " + j.dump());
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix: expected a non-empty list of rows");
  if (j.front().is_number()) {  // a bare list is a column
    Matrix m(static_cast<Eigen::Index>(j.size()), 1);
    for (size_t i = 0; i < j.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = number_from_json(j[i]);
    return m;
  }
  const auto cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ParseError("matrix: rows must be non-empty lists");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ParseError("matrix: ragged rows");
    for (size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = number_from_json(j[i][k]);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

Json to_json(const FiniteSeq& z) {
  Json entries = Json::array();
  for (const auto& e : z.entries()) {
    Json row = Json::array();
    for (Eigen::Index i = 0; i < e.size(); ++i) row.push_back(number_to_json(e(i)));
    entries.push_back(std::move(row));
  }
  return {{"dim", z.dim()}, {"start", z.start()}, {"entries", std::move(entries)}};
}

FiniteSeq finite_seq_from_json(const Json& j) {
  return guarded("sequence", [&] {
    require_object(j, "sequence");
    const int dim = j.at("dim").get<int>();
    const auto& rows = j.at("entries");
    if (!rows.is_array() || rows.empty()) throw ParseError("sequence: entries must be a non-empty list");
    const int start = j.contains("start") ? j.at("start").get<int>() : 1 - static_cast<int>(rows.size());
    std::vector<Vector> entries;
    for (const auto& row : rows) {
      const auto list = row.is_array() ? row : Json::array({row});
      Vector v(static_cast<Eigen::Index>(list.size()));
      for (size_t i = 0; i < list.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(list[i]);
      entries.push_back(std::move(v));
    }
    try {
      return FiniteSeq(dim, start, std::move(entries));
    } catch (const DimensionMismatch& e) {
      throw ParseError(e.what());
    }
  });
}

FiniteSeq finite_seq_from_csv(std::istream& in) {
  std::vector<Vector> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    Vector v(static_cast<Eigen::Index>(cells.size()));
    for (size_t i = 0; i < cells.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(cells[i]);
    if (!rows.empty() && v.size() != rows.front().size()) throw ParseError("sequence csv: ragged rows");
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw ParseError("sequence csv: no rows");
  const int dim = static_cast<int>(rows.front().size());
  const int start = 1 - static_cast<int>(rows.size());
  return FiniteSeq(dim, start, std::move(rows));
}

// ---------------------------------------------------------------------------

Json to_json(const KernelSeq& k) {
  Json mats = Json::array();
  for (const auto& m : k.matrices()) mats.push_back(matrix_to_json(m));
  Json tail = {{"kind", k.tail().kind == KernelTail::Kind::zero ? "zero" : "geometric"}};
  if (k.tail().kind == KernelTail::Kind::geometric) {
    tail["M"] = number_to_json(k.tail().M);
    tail["rho"] = number_to_json(k.tail().rho);
  }
  return {{"in_dim", k.in_dim()},
          {"out_dim", k.out_dim()},
          {"window_start", k.window_start()},
          {"matrices", std::move(mats)},
          {"tail", std::move(tail)}};
}

KernelSeq kernel_seq_from_json(const Json& j) {
  return guarded("kernel", [&] {
    require_object(j, "kernel");
    const auto& mats = j.at("matrices");
    if (!mats.is_array() || mats.empty()) throw ParseError("kernel: matrices must be a non-empty list");
    std::vector<Matrix> matrices;
    for (const auto& m : mats) matrices.push_back(matrix_from_json(m));
    const int in_dim = j.contains("in_dim") ? j.at("in_dim").get<int>() : static_cast<int>(matrices.front().cols());
    const int out_dim = j.contains("out_dim") ? j.at("out_dim").get<int>() : static_cast<int>(matrices.front().rows());
    const int window_start =
        j.contains("window_start") ? j.at("window_start").get<int>() : 1 - static_cast<int>(matrices.size());
    KernelTail tail;
    if (j.contains("tail")) {
      const auto& t = j.at("tail");
      const auto kind = t.at("kind").get<std::string>();
      if (kind == "geometric") {
        tail = KernelTail::geometric(number_from_json(t.at("M")), number_from_json(t.at("rho")));
      } else if (kind != "zero") {
        throw ParseError("kernel: unknown tail kind '" + kind + "'");
      }
    }
    try {
      return KernelSeq(in_dim, out_dim, window_start, std::move(matrices), tail);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("kernel: ") + e.what());
    } catch (const std::domain_error& e) {
      throw ParseError(std::string("kernel: ") + e.what());
    }
  });
}

Json to_json(const AnalyticKernel& k) {
  if (const auto* p = std::get_if<PowerLawKernel>(&k)) {
    return {{"family", "power_law"}, {"omega", p->omega}, {"window", p->window}};
  }
  return {{"family", "constant"}, {"level", std::get<ConstantKernel>(k).level}};
}

AnalyticKernel analytic_kernel_from_json(const Json& j) {
  return guarded("analytic kernel", [&]() -> AnalyticKernel {
    require_object(j, "analytic kernel");
    const auto family = j.at("family").get<std::string>();
    if (family == "power_law") {
      PowerLawKernel p;
      p.omega = number_from_json(j.at("omega"));
      if (j.contains("window")) p.window = j.at("window").get<int>();
      if (!(p.omega > -1.0) || !std::isfinite(p.omega) || p.window < 0) {
        throw ParseError("power_law: need finite omega > -1 and window >= 0");
      }
      return p;
    }
    if (family == "constant") {
      ConstantKernel c;
      c.level = number_from_json(j.at("level"));
      if (!(c.level > 0.0) || !std::isfinite(c.level)) throw ParseError("constant: need a finite level > 0");
      return c;
    }
    throw ParseError("analytic kernel: unknown family '" + family + "'");
  });
}

std::variant<KernelSeq, AnalyticKernel> kernel_spec_from_json(const Json& j) {
  if (j.is_object() && j.contains("family")) return analytic_kernel_from_json(j);
  return kernel_seq_from_json(j);
}

Json to_json(const Interval& iv) {
  return {{"lower", number_to_json(iv.lower)}, {"upper", number_to_json(iv.upper)}};
}

Json to_json(const FMPReport& r) {
  Json verdicts = Json::object();
  for (const auto& [name, v] : r.verdicts) verdicts[name] = to_string(v);
  return {{"schema_version", kSchemaVersion},
          {"p", number_to_json(r.p)},
          {"q", number_to_json(r.q)},
          {"q_norm", to_json(r.q_norm)},
          {"sup_norm", to_json(r.sup_norm)},
          {"decays_to_zero", to_string(r.decays_to_zero)},
          {"finite_memory", r.finite_memory},
          {"verdicts", std::move(verdicts)}};
}

// ---------------------------------------------------------------------------

Json to_json(const LinearSSM& sys) {
  return {{"A", matrix_to_json(sys.A())}, {"C", matrix_to_json(sys.C())}, {"h", matrix_to_json(sys.h())}};
}

LinearSSM linear_ssm_from_json(const Json& j) {
  return guarded("ssm", [&] {
    require_object(j, "ssm");
    Matrix A = matrix_from_json(j.at("A"));
    Matrix C = matrix_from_json(j.at("C"));
    // a bare list for h is a single output row
    Matrix h = matrix_from_json(j.at("h"));
    if (j.at("h").front().is_number()) h.transposeInPlace();
    try {
      return LinearSSM(std::move(A), std::move(C), std::move(h));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("ssm: ") + e.what());
    } catch (const std::domain_error& e) {
      throw ParseError(std::string("ssm: ") + e.what());
    }
  });
}

Json to_json(const StabilityReport& r) {
  const char* stable = r.stable == Stability::yes ? "yes" : r.stable == Stability::no ? "no" : "margin_undecided";
  Json out = {{"schema_version", kSchemaVersion},
              {"rho", to_json(r.rho)},
              {"stable", stable},
              {"gelfand_k", r.gelfand_k}};
  if (r.geometric_bound) {
    out["geometric_bound"] = {{"M", number_to_json(r.geometric_bound->M)},
                              {"r", number_to_json(r.geometric_bound->r)}};
  } else {
    out["geometric_bound"] = nullptr;
  }
  return out;
}

Json to_json(const UnstableWitness& w) {
  Json v = Json::array();
  for (Eigen::Index i = 0; i < w.v.size(); ++i) v.push_back({w.v(i).real(), w.v(i).imag()});
  Json traj = Json::array();
  for (const auto& x : w.trajectory) {
    Json row = Json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(x(i));
    traj.push_back(std::move(row));
  }
  return {{"lambda", {w.lambda.real(), w.lambda.imag()}},
          {"modulus", std::abs(w.lambda)},
          {"eigenvector", std::move(v)},
          {"window", w.window},
          {"trajectory_start", -w.window},
          {"trajectory", std::move(traj)},
          {"max_residual", w.max_residual},
          {"sup_norm", w.sup_norm}};
}

// ---------------------------------------------------------------------------

Dataset dataset_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "id" || header[1] != "t" || header.back() != "target") {
    throw ParseError("dataset: header must be id,t,z1..zd,target");
  }
  const int dim = static_cast<int>(header.size()) - 3;

  struct Rows {
    std::map<int, Vector> by_time;
    std::optional<double> target;
  };
  std::vector<std::string> order;
  std::map<std::string, Rows> seqs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string where = "dataset line " + std::to_string(lineno) + ": ";
    if (cells.size() != header.size()) throw ParseError(where + "wrong number of columns");
    const int t = parse_int(cells[1]);
    if (t > 0) throw ParseError(where + "time must be non-positive");
    auto [it, fresh] = seqs.try_emplace(cells[0]);
    if (fresh) order.push_back(cells[0]);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = parse_double(cells[static_cast<size_t>(2 + i)]);
    if (!it->second.by_time.emplace(t, std::move(v)).second) throw ParseError(where + "duplicate time");
    const auto& target = cells.back();
    if (t == 0) {
      if (target.empty()) throw ParseError(where + "missing target on the t = 0 row");
      it->second.target = parse_double(target);
    } else if (!target.empty()) {
      throw ParseError(where + "target only belongs on the t = 0 row");
    }
  }
  if (order.empty()) throw ParseError("dataset: no samples");

  Dataset ds;
  ds.dim = dim;
  ds.targets.resize(static_cast<Eigen::Index>(order.size()));
  for (size_t k = 0; k < order.size(); ++k) {
    const auto& rows = seqs.at(order[k]);
    if (!rows.target) throw ParseError("dataset: sequence '" + order[k] + "' has no t = 0 row");
    const int start = rows.by_time.begin()->first;
    std::vector<Vector> entries(static_cast<size_t>(1 - start), Vector::Zero(dim));
    for (const auto& [t, v] : rows.by_time) entries[static_cast<size_t>(t - start)] = v;
    ds.ids.push_back(order[k]);
    ds.samples.emplace_back(dim, start, std::move(entries));
    ds.targets(static_cast<Eigen::Index>(k)) = *rows.target;
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path data = path;
  std::optional<int> dim;
  if (data.extension() != ".csv") {
    const Json manifest = read_json_file(path);
    guarded("manifest", [&] {
      require_object(manifest, "manifest");
      if (manifest.value("schema_version", kSchemaVersion) != kSchemaVersion) {
        throw ParseError("manifest: unsupported schema_version");
      }
      data = manifest.at("data").get<std::string>();
      if (manifest.contains("dim")) dim = manifest.at("dim").get<int>();
      return 0;
    });
    if (data.is_relative()) data = fs::path(path).parent_path() / data;
  }
  std::ifstream in(data);
  if (!in) throw ParseError("cannot open dataset '" + data.string() + "'");
  Dataset ds = dataset_from_csv(in);
  if (dim && *dim != ds.dim) throw ParseError("dataset: manifest dim disagrees with the CSV columns");
  return ds;
}

std::uint64_t digest(const FiniteSeq& z) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(z.dim()));
  mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(z.start())));
  for (const auto& e : z.entries()) {
    for (Eigen::Index i = 0; i < e.size(); ++i) mix(std::bit_cast<std::uint64_t>(e(i) == 0.0 ? 0.0 : e(i)));
  }
  return h;
}

std::string digest_hex(const FiniteSeq& z) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest(z)));
  return buf;
}

Json to_json(const SeqKernel& K) {
  if (K.is_lambda()) return {{"kind", "lambda"}, {"lambda", K.as_lambda().lambda}, {"dim", K.as_lambda().dim}};
  return {{"kind", "induced"}, {"kappa", to_json(K.as_induced().kappa)}};
}

SeqKernel seq_kernel_from_json(const Json& j) {
  return guarded("kernel spec", [&] {
    require_object(j, "kernel spec");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "lambda") {
      try {
        return SeqKernel::lambda(number_from_json(j.at("lambda")), j.at("dim").get<int>());
      } catch (const std::domain_error& e) {
        throw ParseError(e.what());
      }
    }
    if (kind == "induced") return SeqKernel::induced(kernel_seq_from_json(j.at("kappa")));
    throw ParseError("kernel spec: unknown kind '" + kind + "'");
  });
}

Json to_json(const RidgeFit& fit) {
  Json samples = Json::array();
  Json digests = Json::array();
  for (const auto& z : fit.samples) {
    samples.push_back(to_json(z));
    digests.push_back(digest_hex(z));
  }
  Json alpha = Json::array();
  Json targets = Json::array();
  for (Eigen::Index i = 0; i < fit.alpha.size(); ++i) {
    alpha.push_back(fit.alpha(i));
    targets.push_back(fit.targets(i));
  }
  return {{"schema_version", kSchemaVersion},
          {"kernel", to_json(fit.kernel)},
          {"gamma", fit.gamma},
          {"alpha", std::move(alpha)},
          {"targets", std::move(targets)},
          {"samples", std::move(samples)},
          {"sample_digests", std::move(digests)}};
}

RidgeFit ridge_fit_from_json(const Json& j) {
  return guarded("fit", [&] {
    require_object(j, "fit");
    SeqKernel K = seq_kernel_from_json(j.at("kernel"));
    std::vector<FiniteSeq> samples;
    for (const auto& s : j.at("samples")) samples.push_back(finite_seq_from_json(s));
    const auto& digests = j.at("sample_digests");
    if (digests.size() != samples.size()) throw ParseError("fit: one digest per sample required");
    for (size_t i = 0; i < samples.size(); ++i) {
      if (digests[i].get<std::string>() != digest_hex(samples[i])) {
        throw ParseError("fit: digest mismatch for sample " + std::to_string(i));
      }
    }
    const auto& a = j.at("alpha");
    const auto& y = j.at("targets");
    if (a.size() != samples.size() || y.size() != samples.size()) throw ParseError("fit: length mismatch");
    Vector alpha(static_cast<Eigen::Index>(a.size()));
    Vector targets(static_cast<Eigen::Index>(y.size()));
    for (size_t i = 0; i < a.size(); ++i) {
      alpha(static_cast<Eigen::Index>(i)) = number_from_json(a[i]);
      targets(static_cast<Eigen::Index>(i)) = number_from_json(y[i]);
    }
    const double gamma = number_from_json(j.at("gamma"));
    if (!(gamma > 0.0)) throw ParseError("fit: gamma must be positive");
    Matrix G = gram(K, samples);
    return RidgeFit{std::move(K), std::move(samples), std::move(G), gamma, std::move(alpha), std::move(targets)};
  });
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

}  // namespace fadekit
