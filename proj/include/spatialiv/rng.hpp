#ifndef SPATIALIV_RNG_HPP
#define SPATIALIV_RNG_HPP

#include <array>
#include <cstdint>
#include <string_view>

namespace spatialiv {

/// Philox4x32-10 block function (Salmon et al. 2011).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator: the output stream is a pure function of
/// (seed, stream), so independent streams can be consumed on any thread in any
/// order without changing results.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on (0, 1) with 53-bit resolution.
  double uniform() noexcept;
  double normal() noexcept;

  /// Child generator for a sub-stream; deterministic in (parent seed, stream, child).
  CounterRng split(std::uint64_t child) const noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spatialiv

#endif
