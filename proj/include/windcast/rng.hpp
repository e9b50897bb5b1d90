#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace windcast {

/// Deterministic random source. Draws come from std::mt19937_64 (whose output
/// sequence is fixed by the standard) and are mapped to doubles in-house, so a
/// given seed produces the same stream on every platform and library version.
class Rng {
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	std::uint64_t next_u64() { return engine_(); }

	/// Uniform in [0, 1).
	double uniform() {
		return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
	}

	double uniform(double lo, double hi) {
		return lo + (hi - lo) * uniform();
	}

	/// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
	double normal() {
		// shift into (0, 1] so the log argument is never zero
		double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
		double u2 = uniform();
		return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
	}

	double normal(double mean, double stddev) {
		return mean + stddev * normal();
	}

private:
	std::mt19937_64 engine_;
};

/// Stateless per-trial seed derivation (splitmix64 finalizer over base/index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
	std::uint64_t z = base + (index + 1) * 0x9e3779b97f4a7c15ULL;
	z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
	z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
	return z ^ (z >> 31);
}

} // namespace windcast
