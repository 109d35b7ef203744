#include "nonlocal/sampler.hpp"

#include <cmath>

#include "nonlocal/error.hpp"

namespace nonlocal {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng path_rng(std::uint64_t master_seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b),
                    std::uint32_t(b >> 32)};
  return Rng(seq);
}

double sample_one_sided_stable(double alpha, double t, Rng& rng) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("one-sided stable: alpha must be in (0,1)");
  std::uniform_real_distribution<double> unif(0.0, kPi);
  std::exponential_distribution<double> expo(1.0);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  const double e = expo(rng);
  const double a = std::pow(std::sin(alpha * u) / std::sin(u), 1.0 / (1.0 - alpha)) *
                   std::sin((1.0 - alpha) * u) / std::sin(alpha * u);
  return std::pow(t, 1.0 / alpha) * std::pow(a / e, (1.0 - alpha) / alpha);
}

double sample_subordinator_increment(const BernsteinSpec& spec, double dt, Rng& rng) {
  if (!(dt > 0)) throw DomainError("subordinator increment: dt must be > 0");
  if (const auto* s = std::get_if<Stable>(&spec.variant()))
    return sample_one_sided_stable(s->alpha, dt, rng);
  if (const auto* m = std::get_if<StableMixture>(&spec.variant())) {
    double sum = 0;
    for (const auto& term : m->terms) sum += sample_one_sided_stable(term.alpha, term.weight * dt, rng);
    return sum;
  }
  throw UnsupportedVariant("no subordinator sampler for " + spec.name());
}

}  // namespace nonlocal
