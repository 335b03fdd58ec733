#include "lamiga/material.hpp"

#include <cmath>
#include <numbers>

namespace lamiga {

EngineeringConstants EngineeringConstants::isotropic(double E, double nu) {
  const double G = E / (2.0 * (1.0 + nu));
  return {E, E, E, G, G, G, nu, nu, nu};
}

Tensor4 to_full(const Voigt6& v) {
  Tensor4 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) t(i, j, k, l) = v(voigt_index(i, j), voigt_index(k, l));
  return t;
}

Voigt6 to_voigt(const Tensor4& t) {
  Voigt6 v;
  double scale = 0.0;
  for (double c : t.c) scale = std::max(scale, std::abs(c));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const double c = t(i, j, k, l);
          if (std::abs(c - t(j, i, k, l)) > 1e-10 * scale || std::abs(c - t(i, j, l, k)) > 1e-10 * scale)
            throw MaterialError("stiffness tensor lacks minor symmetry");
          v(voigt_index(i, j), voigt_index(k, l)) = c;
        }
  return v;
}

Stiffness stiffness_from_engineering(const EngineeringConstants& ec) {
  const double mod[6] = {ec.E1, ec.E2, ec.E3, ec.G23, ec.G13, ec.G12};
  for (double m : mod)
    if (!(m > 0.0)) throw MaterialError("engineering moduli must be positive");
  Voigt6 S = Voigt6::Zero();
  S(0, 0) = 1.0 / ec.E1;
  S(1, 1) = 1.0 / ec.E2;
  S(2, 2) = 1.0 / ec.E3;
  S(0, 1) = S(1, 0) = -ec.nu12 / ec.E1;
  S(0, 2) = S(2, 0) = -ec.nu13 / ec.E1;
  S(1, 2) = S(2, 1) = -ec.nu23 / ec.E2;
  S(3, 3) = 1.0 / ec.G23;
  S(4, 4) = 1.0 / ec.G13;
  S(5, 5) = 1.0 / ec.G12;
  Eigen::LLT<Voigt6> llt(S);
  if (llt.info() != Eigen::Success) throw MaterialError("compliance matrix is not positive definite");
  Voigt6 C = llt.solve(Voigt6::Identity());
  C = 0.5 * (C + C.transpose()).eval();
  return Stiffness(C);
}

Tensor4 rotate_full(const Tensor4& t, const Eigen::Matrix3d& Q) {
  // Four successive single-index contractions.
  Tensor4 a, b;
  for (int i = 0; i < 3; ++i)
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) {
          double v = 0.0;
          for (int p = 0; p < 3; ++p) v += Q(i, p) * t(p, q, r, s);
          a(i, q, r, s) = v;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) {
          double v = 0.0;
          for (int q = 0; q < 3; ++q) v += Q(j, q) * a(i, q, r, s);
          b(i, j, r, s) = v;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s) {
          double v = 0.0;
          for (int r = 0; r < 3; ++r) v += Q(k, r) * b(i, j, r, s);
          a(i, j, k, s) = v;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = 0.0;
          for (int s = 0; s < 3; ++s) v += Q(l, s) * a(i, j, k, s);
          b(i, j, k, l) = v;
        }
  return b;
}

Stiffness rotate_inplane(const Stiffness& st, double angle_deg) {
  const double th = angle_deg * std::numbers::pi / 180.0;
  double c = std::cos(th), s = std::sin(th);
  // Snap multiples of 90 degrees so axis swaps stay exact.
  if (std::abs(c) < 1e-15) c = 0.0;
  if (std::abs(s) < 1e-15) s = 0.0;
  Eigen::Matrix3d Q;
  Q << c, -s, 0, s, c, 0, 0, 0, 1;
  Voigt6 v = to_voigt(rotate_full(st.full, Q));
  v = 0.5 * (v + v.transpose()).eval();
  return Stiffness(v);
}

Stiffness rotate_to_global(const Stiffness& st, const Eigen::Matrix3d& D) {
  if ((D.transpose() * D - Eigen::Matrix3d::Identity()).norm() > 1e-8)
    throw MaterialError("basis change operator is not orthogonal");
  Tensor4 t = rotate_full(st.full, D);
  Voigt6 v = to_voigt(t);
  return Stiffness(v);
}

EngineeringConstants benchmark_material() { return {25.0, 1.0, 1.0, 0.2, 0.5, 0.5, 0.25, 0.25, 0.25}; }

void Layup::validate() const {
  if (plies.empty()) throw MaterialError("layup has no plies");
  for (const Ply& p : plies)
    if (!(p.thickness > 0.0)) throw MaterialError("ply thickness must be positive");
}

double Layup::total_thickness() const {
  double h = 0.0;
  for (const Ply& p : plies) h += p.thickness;
  return h;
}

std::vector<double> Layup::fractions() const {
  const double h = total_thickness();
  std::vector<double> f;
  for (const Ply& p : plies) f.push_back(p.thickness / h);
  return f;
}

std::vector<double> Layup::boundaries() const {
  const double h = total_thickness();
  std::vector<double> b{0.0};
  double acc = 0.0;
  for (const Ply& p : plies) {
    acc += p.thickness;
    b.push_back(acc / h);
  }
  b.back() = 1.0;
  return b;
}

bool Layup::is_symmetric(double tol) const {
  const int n = size();
  for (int k = 0; k < n / 2; ++k) {
    const Ply& a = plies[k];
    const Ply& b = plies[n - 1 - k];
    if (std::abs(a.thickness - b.thickness) > tol * total_thickness()) return false;
    if (std::abs(a.angle_deg - b.angle_deg) > tol) return false;
    const Voigt6 ca = stiffness_from_engineering(a.material).voigt;
    const Voigt6 cb = stiffness_from_engineering(b.material).voigt;
    if ((ca - cb).norm() > tol * ca.norm()) return false;
  }
  return true;
}

Stiffness Layup::ply_stiffness(int k) const {
  const Ply& p = plies.at(static_cast<std::size_t>(k));
  return rotate_inplane(stiffness_from_engineering(p.material), p.angle_deg);
}

std::vector<Stiffness> Layup::ply_stiffnesses() const {
  std::vector<Stiffness> out;
  for (int k = 0; k < size(); ++k) out.push_back(ply_stiffness(k));
  return out;
}

int Layup::ply_at(double z) const {
  const std::vector<double> b = boundaries();
  for (int k = size() - 1; k > 0; --k)
    if (z >= b[k]) return k;
  return 0;
}

Layup cross_ply(int n, double total_thickness, const EngineeringConstants& ec) {
  if (n < 1) throw MaterialError("cross-ply layup needs at least one ply");
  Layup l;
  for (int k = 0; k < n; ++k) l.plies.push_back({total_thickness / n, k % 2 == 0 ? 0.0 : 90.0, ec});
  return l;
}

Homogenized homogenize(const Layup& layup) {
  layup.validate();
  Homogenized out;
  if (!layup.is_symmetric(1e-9))
    out.warnings.push_back("asymmetric stacking sequence: homogenized mid-surface differs from the geometric one");
  const int n = layup.size();
  const std::vector<double> t = layup.fractions();
  std::vector<Voigt6> c;
  for (int k = 0; k < n; ++k) {
    c.push_back(layup.ply_stiffness(k).voigt);
    if (!(std::abs(c.back()(2, 2)) > 0.0)) throw MaterialError("homogenize: zero C33 in a ply");
  }
  auto mean = [&](int I, int J) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += t[k] * c[k](I, J);
    return s;
  };

  // Start from the volume mean; the listed groups overwrite their entries.
  Voigt6 cb = Voigt6::Zero();
  for (int I = 0; I < 6; ++I)
    for (int J = 0; J < 6; ++J) cb(I, J) = mean(I, J);

  // Zeta in {1,2}, eta = 3 first: the equation is implicit in Cbar_{zeta 3}.
  double cb3[2];
  for (int z = 0; z < 2; ++z) {
    double lhs = 1.0, rhs = mean(z, 2);
    for (int k = 1; k < n; ++k) {
      const double f = t[k] * (c[0](2, 2) - c[k](2, 2)) / c[k](2, 2);
      lhs += f;
      rhs += c[k](z, 2) * f;
    }
    cb3[z] = rhs / lhs;
  }
  double cz[2][2];
  for (int z = 0; z < 2; ++z)
    for (int e = 0; e < 2; ++e) {
      double s = mean(z, e);
      for (int k = 1; k < n; ++k) s += (c[k](z, 2) - cb3[z]) * t[k] * (c[0](e, 2) - c[k](e, 2)) / c[k](2, 2);
      cz[z][e] = s;
    }
  cb(0, 0) = cz[0][0];
  cb(1, 1) = cz[1][1];
  cb(0, 1) = cb(1, 0) = cz[0][1];
  cb(0, 2) = cb(2, 0) = cb3[0];
  cb(1, 2) = cb(2, 1) = cb3[1];

  double inv33 = 0.0;
  for (int k = 0; k < n; ++k) inv33 += t[k] / c[k](2, 2);
  cb(2, 2) = 1.0 / inv33;

  double s44 = 0.0, s55 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double dk = c[k](3, 3) * c[k](4, 4);
    s44 += t[k] * c[k](3, 3) / dk;
    s55 += t[k] * c[k](4, 4) / dk;
  }
  const double delta = s44 * s55;
  cb(3, 3) = s44 / delta;
  cb(4, 4) = s55 / delta;
  cb(5, 5) = mean(5, 5);

  if (std::abs(cz[0][1] - cz[1][0]) > 1e-12 * std::abs(cb(0, 0)))
    out.warnings.push_back("homogenized in-plane coupling is not symmetric; the 12 term is used for both");
  Eigen::LLT<Voigt6> llt(cb);
  if (llt.info() != Eigen::Success) throw MaterialError("homogenized stiffness is not positive definite");
  out.C = Stiffness(cb);
  return out;
}

Voigt6 sun_li_stiffness(const Layup& layup) {
  layup.validate();
  const int n = layup.size();
  const std::vector<double> t = layup.fractions();
  std::vector<Voigt6> c;
  for (int k = 0; k < n; ++k) c.push_back(layup.ply_stiffness(k).voigt);
  double inv33 = 0.0;
  for (int k = 0; k < n; ++k) inv33 += t[k] / c[k](2, 2);
  Voigt6 cb = Voigt6::Zero();
  for (int k = 0; k < n; ++k) cb += t[k] * c[k];
  double r[2] = {0.0, 0.0};
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < 2; ++a) r[a] += t[k] * c[k](a, 2) / c[k](2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += t[k] * (c[k](a, b) - c[k](a, 2) * c[k](b, 2) / c[k](2, 2));
      cb(a, b) = s + r[a] * r[b] / inv33;
    }
  for (int a = 0; a < 2; ++a) cb(a, 2) = cb(2, a) = r[a] / inv33;
  cb(2, 2) = 1.0 / inv33;
  double i44 = 0.0, i55 = 0.0;
  for (int k = 0; k < n; ++k) {
    i44 += t[k] / c[k](3, 3);
    i55 += t[k] / c[k](4, 4);
  }
  cb(3, 3) = 1.0 / i44;
  cb(4, 4) = 1.0 / i55;
  return cb;
}

}  // namespace lamiga
