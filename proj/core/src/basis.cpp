#include "rodspec/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rodspec/errors.hpp"

namespace rodspec {
namespace {

void check_mode(int mode) {
  if (mode < 0 || mode >= kStrainModes) {
    throw ValidationError("basis: strain mode index " + std::to_string(mode) + " outside [0, 6)");
  }
}

}  // namespace

Atom Atom::polynomial(int degree) {
  if (degree < 0) throw ValidationError("basis: polynomial degree must be >= 0");
  return Atom(AtomFamily::polynomial, degree, 0);
}

Atom Atom::cosine(int order) {
  if (order < 0) throw ValidationError("basis: cosine order must be >= 0");
  return Atom(AtomFamily::cosine, order, 0);
}

Atom Atom::sine(int order) {
  if (order < 1) throw ValidationError("basis: sine order must be >= 1 (sin(0) vanishes)");
  return Atom(AtomFamily::sine, order, 0);
}

Atom Atom::gaussian(int index, int count) {
  if (count < 1 || index < 0 || index > count) {
    throw ValidationError("basis: gaussian needs count >= 1 and 0 <= index <= count");
  }
  return Atom(AtomFamily::gaussian, index, count);
}

Atom Atom::sampled(std::vector<double> values) {
  if (values.size() < 2) throw ValidationError("basis: sampled atom needs >= 2 values");
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw ValidationError("basis: sampled atom has non-finite values");
  }
  Atom a(AtomFamily::sampled, 0, static_cast<int>(values.size()));
  a.samples_ = std::make_shared<const std::vector<double>>(std::move(values));
  return a;
}

double Atom::width() const {
  return 1.0 / (2.0 * std::sqrt(std::numbers::ln2) * static_cast<double>(count_));
}

std::span<const double> Atom::samples() const {
  if (!samples_) return {};
  return *samples_;
}

double Atom::value(double x) const {
  const double two_pi = 2.0 * std::numbers::pi;
  switch (family_) {
    case AtomFamily::polynomial:
      return std::pow(x, order_);
    case AtomFamily::cosine:
      return std::cos(two_pi * order_ * x);
    case AtomFamily::sine:
      return std::sin(two_pi * order_ * x);
    case AtomFamily::gaussian: {
      const double c = width();
      const double d = x - static_cast<double>(order_) / count_;
      return std::exp(-d * d / (c * c));
    }
    case AtomFamily::sampled: {
      const auto& v = *samples_;
      const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(v.size() - 1);
      const auto i = std::min(static_cast<std::size_t>(pos), v.size() - 2);
      const double f = pos - static_cast<double>(i);
      return (1.0 - f) * v[i] + f * v[i + 1];
    }
  }
  return 0.0;
}

double Atom::square_integral(double length) const {
  switch (family_) {
    case AtomFamily::polynomial:
      return length / (2.0 * order_ + 1.0);
    case AtomFamily::cosine:
      return order_ == 0 ? length : 0.5 * length;
    case AtomFamily::sine:
      return 0.5 * length;
    case AtomFamily::gaussian: {
      const double c = width();
      const double mu = static_cast<double>(order_) / count_;
      const double k = std::numbers::sqrt2 / c;
      return length * c * std::sqrt(std::numbers::pi) / (2.0 * std::numbers::sqrt2) *
             (std::erf(k * (1.0 - mu)) + std::erf(k * mu));
    }
    case AtomFamily::sampled: {
      const auto& v = *samples_;
      const double dx = 1.0 / static_cast<double>(v.size() - 1);
      double sum = 0.0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        sum += (v[i] * v[i] + v[i] * v[i + 1] + v[i + 1] * v[i + 1]) * dx / 3.0;
      }
      return length * sum;
    }
  }
  return 0.0;
}

std::string Atom::label() const {
  switch (family_) {
    case AtomFamily::polynomial:
      return "poly" + std::to_string(order_);
    case AtomFamily::cosine:
      return "cos" + std::to_string(order_);
    case AtomFamily::sine:
      return "sin" + std::to_string(order_);
    case AtomFamily::gaussian:
      return "gauss" + std::to_string(order_) + "/" + std::to_string(count_);
    case AtomFamily::sampled:
      return "sampled" + std::to_string(count_);
  }
  return "?";
}

bool operator==(const Atom& a, const Atom& b) {
  if (a.family_ != b.family_ || a.order_ != b.order_ || a.count_ != b.count_) return false;
  if (a.family_ != AtomFamily::sampled) return true;
  return *a.samples_ == *b.samples_;
}

BasisDictionary::BasisDictionary(double length) : length_(length) {
  if (!(length > 0.0)) throw ValidationError("basis: dictionary length must be > 0");
}

BasisDictionary BasisDictionary::polynomial(double length, int order,
                                            std::array<bool, kStrainModes> modes) {
  BasisDictionary d(length);
  for (int i = 0; i < kStrainModes; ++i) {
    if (modes[i]) d.add_polynomial(i, order);
  }
  return d;
}

BasisDictionary BasisDictionary::fourier(double length, int order,
                                         std::array<bool, kStrainModes> modes) {
  BasisDictionary d(length);
  for (int i = 0; i < kStrainModes; ++i) {
    if (modes[i]) d.add_fourier(i, order);
  }
  return d;
}

BasisDictionary BasisDictionary::gaussian(double length, int order,
                                          std::array<bool, kStrainModes> modes) {
  BasisDictionary d(length);
  for (int i = 0; i < kStrainModes; ++i) {
    if (modes[i]) d.add_gaussian(i, order);
  }
  return d;
}

void BasisDictionary::add(int mode, Atom atom) {
  check_mode(mode);
  auto& list = atoms_[static_cast<std::size_t>(mode)];
  if (std::find(list.begin(), list.end(), atom) != list.end()) {
    throw ValidationError("basis: duplicate atom " + atom.label() + " in mode " +
                          kModeNames[static_cast<std::size_t>(mode)]);
  }
  list.push_back(std::move(atom));
}

void BasisDictionary::add_polynomial(int mode, int order) {
  for (int h = 0; h <= order; ++h) add(mode, Atom::polynomial(h));
}

void BasisDictionary::add_fourier(int mode, int order) {
  for (int h = 0; h <= order; ++h) add(mode, Atom::cosine(h));
  for (int h = 1; h <= order; ++h) add(mode, Atom::sine(h));
}

void BasisDictionary::add_gaussian(int mode, int order) {
  if (order < 1) throw ValidationError("basis: gaussian order must be >= 1");
  for (int h = 0; h <= order; ++h) add(mode, Atom::gaussian(h, order));
}

int BasisDictionary::size() const {
  int n = 0;
  for (const auto& list : atoms_) n += static_cast<int>(list.size());
  return n;
}

std::span<const Atom> BasisDictionary::atoms(int mode) const {
  check_mode(mode);
  return atoms_[static_cast<std::size_t>(mode)];
}

int BasisDictionary::first_column(int mode) const {
  check_mode(mode);
  int c = 0;
  for (int i = 0; i < mode; ++i) c += static_cast<int>(atoms_[static_cast<std::size_t>(i)].size());
  return c;
}

int BasisDictionary::mode_of(int column) const {
  int c = column;
  for (int i = 0; i < kStrainModes; ++i) {
    const int n = static_cast<int>(atoms_[static_cast<std::size_t>(i)].size());
    if (c < n) return i;
    c -= n;
  }
  throw IndexOutOfRange("basis: column " + std::to_string(column) + " outside dictionary");
}

const Atom& BasisDictionary::atom(int column) const {
  const int mode = mode_of(column);
  return atoms_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(column - first_column(mode))];
}

Matrix6X BasisDictionary::basis_matrix(double s) const {
  if (!(s >= 0.0 && s <= length_)) {
    throw OutOfDomain("basis_matrix: s = " + std::to_string(s) + " outside [0, L]");
  }
  const double x = s / length_;
  Matrix6X b = Matrix6X::Zero(6, size());
  Eigen::Index col = 0;
  for (int i = 0; i < kStrainModes; ++i) {
    for (const Atom& a : atoms_[static_cast<std::size_t>(i)]) b(i, col++) = a.value(x);
  }
  return b;
}

}  // namespace rodspec
