#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace rfpresence {

/// Dense row-major array with a fixed rank. The last index varies fastest.
template <typename T, std::size_t Rank>
struct Array {
  std::array<std::size_t, Rank> dims{};
  std::vector<T> data{};

  Array() = default;
  explicit Array(std::array<std::size_t, Rank> d, T fill = T{}) : dims(d), data(Count(d), fill) {}

  static std::size_t Count(const std::array<std::size_t, Rank> &d) {
    return std::accumulate(d.begin(), d.end(), std::size_t{1}, std::multiplies<>());
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const { return dims[axis]; }

  template <typename... Idx>
  [[nodiscard]] std::size_t Offset(Idx... idx) const {
    static_assert(sizeof...(Idx) == Rank);
    const std::array<std::size_t, Rank> ix{static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t a = 0; a < Rank; ++a) {
      off = off * dims[a] + ix[a];
    }
    return off;
  }

  template <typename... Idx>
  T &operator()(Idx... idx) {
    return data[Offset(idx...)];
  }
  template <typename... Idx>
  const T &operator()(Idx... idx) const {
    return data[Offset(idx...)];
  }

  std::span<T> span() { return data; }
  [[nodiscard]] std::span<const T> span() const { return data; }

  bool operator==(const Array &) const = default;
};

using Complex = std::complex<double>;
using RealMatrix = Array<double, 2>;
using ComplexMatrix = Array<Complex, 2>;
using RealArray3 = Array<double, 3>;
using ComplexArray3 = Array<Complex, 3>;
using RealArray4 = Array<double, 4>;
using ComplexArray4 = Array<Complex, 4>;

} // namespace rfpresence
