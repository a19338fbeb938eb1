#pragma once

// Parameter declarations and per-agent sampling, shared by avatar scripts and
// the built-in archetypes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avatarsim/rng.hpp"

namespace avatarsim {

enum class ValueType : std::uint8_t { Int, Real, Bool };

std::string_view to_string(ValueType t) noexcept;

/// A script value: nil, bool, int or real.
struct Value {
  enum class Kind : std::uint8_t { Nil, Bool, Int, Real };
  Kind kind = Kind::Nil;
  std::int64_t i = 0;
  double r = 0.0;
  bool b = false;

  static Value nil() { return {}; }
  static Value boolean(bool v) { return {Kind::Bool, 0, 0.0, v}; }
  static Value integer(std::int64_t v) { return {Kind::Int, v, 0.0, false}; }
  static Value real(double v) { return {Kind::Real, 0, v, false}; }

  bool is_nil() const noexcept { return kind == Kind::Nil; }
  bool is_number() const noexcept { return kind == Kind::Int || kind == Kind::Real; }
  double as_real() const noexcept { return kind == Kind::Int ? static_cast<double>(i) : r; }

  friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);

struct Distribution {
  enum class Kind : std::uint8_t { Constant, Uniform, UniformInt, Normal, LogNormal };
  Kind kind = Kind::Constant;
  double a = 0.0;  // constant value, lower bound, or location
  double b = 0.0;  // upper bound or scale

  static Distribution constant(double v) { return {Kind::Constant, v, 0.0}; }
  static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static Distribution uniform_int(std::int64_t lo, std::int64_t hi) {
    return {Kind::UniformInt, static_cast<double>(lo), static_cast<double>(hi)};
  }
  static Distribution normal(double mu, double sigma) { return {Kind::Normal, mu, sigma}; }
  static Distribution lognormal(double mu, double sigma) { return {Kind::LogNormal, mu, sigma}; }

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

std::string_view to_string(Distribution::Kind k) noexcept;

class DistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ParamDecl {
  std::string name;
  ValueType type = ValueType::Real;
  Distribution dist;

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

/// Throws DistributionError when the support is invalid for the declared
/// type (a > b, negative scale, non-integer bounds on an int parameter).
void validate(const ParamDecl& decl);

/// Draws one value. Constants consume no randomness.
Value sample(const ParamDecl& decl, Rng& rng);

/// Reserved parameter names coupling agents to the kernel.
inline constexpr std::string_view kWakeRateParam = "wake_rate";
inline constexpr std::string_view kNewsSensParam = "news_sens";
inline constexpr double kDefaultWakeRate = 1.0;
inline constexpr double kDefaultNewsSens = 0.0;

/// Stream seeds derived from a family seed for member `index`.
std::uint64_t param_stream_seed(std::uint64_t family_seed, std::int64_t index);
std::uint64_t clock_stream_seed(std::uint64_t family_seed, std::int64_t index);
std::uint64_t decision_stream_seed(std::uint64_t family_seed, std::int64_t index);

/// Samples a parameter vector for each of n members; member k uses its own
/// stream, so its values do not depend on n.
std::vector<std::vector<Value>> sample_family(const std::vector<ParamDecl>& decls, std::int64_t n,
                                              std::uint64_t family_seed);

}  // namespace avatarsim
