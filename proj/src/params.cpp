#include "avatarsim/params.hpp"

#include <cmath>
#include <sstream>

namespace avatarsim {

std::string_view to_string(ValueType t) noexcept {
  switch (t) {
    case ValueType::Int: return "int";
    case ValueType::Real: return "real";
    case ValueType::Bool: return "bool";
  }
  return "?";
}

std::string to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::Nil: return "nil";
    case Value::Kind::Bool: return v.b ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.i);
    case Value::Kind::Real: {
      std::ostringstream os;
      os.precision(17);
      os << v.r;
      return os.str();
    }
  }
  return "?";
}

std::string_view to_string(Distribution::Kind k) noexcept {
  switch (k) {
    case Distribution::Kind::Constant: return "constant";
    case Distribution::Kind::Uniform: return "uniform";
    case Distribution::Kind::UniformInt: return "uniform_int";
    case Distribution::Kind::Normal: return "normal";
    case Distribution::Kind::LogNormal: return "lognormal";
  }
  return "?";
}

namespace {

bool integral(double x) { return std::isfinite(x) && std::trunc(x) == x && std::fabs(x) < 0x1.0p62; }

[[noreturn]] void fail(const ParamDecl& d, const std::string& why) {
  throw DistributionError("parameter '" + d.name + "': " + why);
}

}  // namespace

void validate(const ParamDecl& d) {
  using K = Distribution::Kind;
  const auto& dist = d.dist;
  if (!std::isfinite(dist.a) || !std::isfinite(dist.b)) fail(d, "non-finite distribution argument");
  if (d.type == ValueType::Bool) fail(d, "parameters must be int or real");
  if (d.type == ValueType::Int && dist.kind != K::Constant && dist.kind != K::UniformInt) {
    fail(d, "int parameters take constant(...) or uniform_int(...)");
  }
  switch (dist.kind) {
    case K::Constant:
      if (d.type == ValueType::Int && !integral(dist.a)) fail(d, "constant is not an integer");
      break;
    case K::Uniform:
      if (dist.a > dist.b) fail(d, "uniform(a, b) needs a <= b");
      break;
    case K::UniformInt:
      if (!integral(dist.a) || !integral(dist.b)) fail(d, "uniform_int bounds must be integers");
      if (dist.a > dist.b) fail(d, "uniform_int(a, b) needs a <= b");
      break;
    case K::Normal:
    case K::LogNormal:
      if (dist.b < 0) fail(d, std::string(to_string(dist.kind)) + "(mu, sigma) needs sigma >= 0");
      break;
  }
}

Value sample(const ParamDecl& d, Rng& rng) {
  using K = Distribution::Kind;
  const auto& dist = d.dist;
  double x = 0.0;
  switch (dist.kind) {
    case K::Constant:
      x = dist.a;
      break;
    case K::Uniform:
      x = dist.a == dist.b ? dist.a : rng.uniform(dist.a, dist.b);
      break;
    case K::UniformInt: {
      const auto v = rng.uniform_int(static_cast<std::int64_t>(dist.a), static_cast<std::int64_t>(dist.b));
      if (d.type == ValueType::Int) return Value::integer(v);
      x = static_cast<double>(v);
      break;
    }
    case K::Normal:
      x = rng.normal(dist.a, dist.b);
      break;
    case K::LogNormal:
      x = rng.lognormal(dist.a, dist.b);
      break;
  }
  if (d.type == ValueType::Int) return Value::integer(static_cast<std::int64_t>(x));
  return Value::real(x);
}

std::uint64_t param_stream_seed(std::uint64_t family_seed, std::int64_t index) {
  return derive_seed(family_seed, 3 * static_cast<std::uint64_t>(index));
}
std::uint64_t clock_stream_seed(std::uint64_t family_seed, std::int64_t index) {
  return derive_seed(family_seed, 3 * static_cast<std::uint64_t>(index) + 1);
}
std::uint64_t decision_stream_seed(std::uint64_t family_seed, std::int64_t index) {
  return derive_seed(family_seed, 3 * static_cast<std::uint64_t>(index) + 2);
}

std::vector<std::vector<Value>> sample_family(const std::vector<ParamDecl>& decls, std::int64_t n,
                                              std::uint64_t family_seed) {
  if (n < 1) throw std::invalid_argument("family size must be >= 1");
  for (const auto& d : decls) validate(d);
  std::vector<std::vector<Value>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    Rng rng(param_stream_seed(family_seed, k));
    std::vector<Value> values;
    values.reserve(decls.size());
    for (const auto& d : decls) values.push_back(sample(d, rng));
    out.push_back(std::move(values));
  }
  return out;
}

}  // namespace avatarsim
