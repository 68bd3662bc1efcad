#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sizerforge {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// Parses a plain decimal/scientific number; returns false on trailing garbage.
bool parse_number(std::string_view text, double& out);

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

/// SplitMix64 finaliser, used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x);

/// Child seed = hash(run_seed, "loop", loop, "iter", iter). The textual form
/// "<seed>/loop/<i>/iter/<j>" is hashed with FNV-1a and finalised with
/// SplitMix64 so independent implementations can reproduce it.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t loop, std::uint64_t iter);

double mean(std::span<const double> xs);
/// Sample standard deviation (n-1); 0 for fewer than two values.
double sample_stddev(std::span<const double> xs);

}  // namespace sizerforge
