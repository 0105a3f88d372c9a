#pragma once

// JSON and CSV representations of the library's objects. Infinite values are written
// as the string "inf"; matrices are lists of rows.

#include <cstdint>
#include <istream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fadekit/convrep.hpp"
#include "fadekit/rkhs.hpp"
#include "fadekit/seqspace.hpp"
#include "fadekit/ssm.hpp"

namespace fadekit {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent input document.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

Json number_to_json(double x);
double number_from_json(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// {"dim": d, "start": s, "entries": [[...], ...]} with entries oldest first.
Json to_json(const FiniteSeq& z);
FiniteSeq finite_seq_from_json(const Json& j);

/// One row per time step, oldest first, d columns; the last row is t = 0.
FiniteSeq finite_seq_from_csv(std::istream& in);

// {"in_dim", "out_dim", "window_start", "matrices", "tail": {"kind", "M", "rho"}}
Json to_json(const KernelSeq& k);
KernelSeq kernel_seq_from_json(const Json& j);

// {"family": "power_law", "omega": w[, "window": n]} or {"family": "constant", "level": c}
Json to_json(const AnalyticKernel& k);
AnalyticKernel analytic_kernel_from_json(const Json& j);

/// A classify input is either an explicit kernel or an analytic family.
std::variant<KernelSeq, AnalyticKernel> kernel_spec_from_json(const Json& j);

Json to_json(const Interval& iv);
Json to_json(const FMPReport& r);

// {"A": [[...]], "C": [[...]], "h": [[...]]}
Json to_json(const LinearSSM& sys);
LinearSSM linear_ssm_from_json(const Json& j);

Json to_json(const StabilityReport& r);
Json to_json(const UnstableWitness& w);

// --- regression data ----------------------------------------------------------

struct Dataset {
  int dim = 1;
  std::vector<std::string> ids;
  std::vector<FiniteSeq> samples;
  Vector targets;
};

/// CSV with header "id,t,z1..zd,target". Rows of one id may appear in any order;
/// times must be non-positive and distinct, the target sits on the t = 0 row and is
/// left empty elsewhere. Missing times inside a support read as zero.
Dataset dataset_from_csv(std::istream& in);

/// JSON manifest {"schema_version": 1, "data": "file.csv", "dim": d}; relative data
/// paths resolve against the manifest's directory. A path ending in .csv is read directly.
Dataset load_dataset(const std::string& path);

/// 64-bit FNV-1a over dim, start and the IEEE bit patterns of the entries.
std::uint64_t digest(const FiniteSeq& z);
std::string digest_hex(const FiniteSeq& z);

Json to_json(const SeqKernel& K);
SeqKernel seq_kernel_from_json(const Json& j);

/// Kernel spec, gamma, alpha, targets, the samples and their digests.
Json to_json(const RidgeFit& fit);
/// Recomputes the Gram matrix and throws ParseError if any sample digest disagrees.
RidgeFit ridge_fit_from_json(const Json& j);

/// Reads a whole file; throws ParseError when it cannot be opened or parsed.
Json read_json_file(const std::string& path);

}  // namespace fadekit
