#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rodspec/liealg.hpp"
#include "rodspec/rodmodel.hpp"

namespace rodspec {

enum class AtomFamily { polynomial, cosine, sine, gaussian, sampled };

/// Scalar basis function on [0, L], evaluated on the normalized abscissa x = s / L.
///
///   polynomial  x^h
///   cosine      cos(2 pi h x)
///   sine        sin(2 pi h x)          (h >= 1)
///   gaussian    exp(-(x - h/n)^2 / c^2), c = 1 / (2 sqrt(ln 2) n)
///   sampled     piecewise-linear interpolation of uniformly spaced values
class Atom {
 public:
  static Atom polynomial(int degree);
  static Atom cosine(int order);
  static Atom sine(int order);
  static Atom gaussian(int index, int count);
  static Atom sampled(std::vector<double> values);

  AtomFamily family() const { return family_; }
  int order() const { return order_; }
  int count() const { return count_; }
  double width() const;  // gaussian c
  std::span<const double> samples() const;

  double value(double x) const;
  /// Integral of b(s)^2 over [0, L], in closed form for every family.
  double square_integral(double length) const;
  std::string label() const;

  friend bool operator==(const Atom& a, const Atom& b);

 private:
  Atom(AtomFamily family, int order, int count) : family_(family), order_(order), count_(count) {}

  AtomFamily family_;
  int order_;
  int count_;
  std::shared_ptr<const std::vector<double>> samples_;
};

inline constexpr int kStrainModes = 6;
inline constexpr std::array<const char*, kStrainModes> kModeNames = {"kx", "ky", "kz",
                                                                      "sx", "sy", "sz"};

/// Ordered atoms per strain mode. Column j of B_q(s) belongs to exactly one mode;
/// columns are laid out mode by mode in insertion order.
class BasisDictionary {
 public:
  explicit BasisDictionary(double length);

  /// Same family and order on every mode where `modes[i]` is set.
  ///   polynomial order n: degrees 0..n
  ///   fourier order n:    cos 0..n, sin 1..n
  ///   gaussian order n:   centers h/n, h = 0..n
  static BasisDictionary polynomial(double length, int order,
                                    std::array<bool, kStrainModes> modes = all_modes());
  static BasisDictionary fourier(double length, int order,
                                 std::array<bool, kStrainModes> modes = all_modes());
  static BasisDictionary gaussian(double length, int order,
                                  std::array<bool, kStrainModes> modes = all_modes());
  static constexpr std::array<bool, kStrainModes> all_modes() {
    return {true, true, true, true, true, true};
  }

  void add(int mode, Atom atom);
  void add_polynomial(int mode, int order);
  void add_fourier(int mode, int order);
  void add_gaussian(int mode, int order);

  double length() const { return length_; }
  int size() const;  // n_q
  bool empty() const { return size() == 0; }
  std::span<const Atom> atoms(int mode) const;
  int first_column(int mode) const;
  int mode_of(int column) const;
  const Atom& atom(int column) const;

  /// Throws OutOfDomain when s is outside [0, L].
  Matrix6X basis_matrix(double s) const;

 private:
  double length_;
  std::array<std::vector<Atom>, kStrainModes> atoms_;
};

}  // namespace rodspec
