#include "gridsense/measurement.hpp"

#include <algorithm>
#include <cmath>

namespace gridsense {

namespace {

constexpr Complex kJ{0.0, 1.0};

// Column of theta_k in the flattened state, or -1 for the slack.
Eigen::Index theta_column(std::size_t bus, std::size_t slack) {
  if (bus == slack) return -1;
  return static_cast<Eigen::Index>(bus < slack ? bus : bus - 1);
}

Eigen::Index vmag_column(std::size_t bus, std::size_t n) { return static_cast<Eigen::Index>(n - 1 + bus); }

// Accumulates d(value)/d(theta_k) and d(value)/d|V_k| of a complex quantity
// into a row pair (real part, imaginary part).
struct ComplexGradient {
  Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> re;
  Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> im;
  std::size_t slack;
  std::size_t n;

  void add(std::size_t bus, Complex d_theta, Complex d_vmag) {
    if (auto c = theta_column(bus, slack); c >= 0) {
      re[c] += d_theta.real();
      im[c] += d_theta.imag();
    }
    const auto c = vmag_column(bus, n);
    re[c] += d_vmag.real();
    im[c] += d_vmag.imag();
  }
};

struct BranchTerms {
  std::size_t near = 0;  // bus at the metered end
  std::size_t far = 0;
  Complex a_near, a_far;  // I = a_near V_near + a_far V_far
};

BranchTerms branch_terms(const BranchAdmittance& br, BranchEnd end) {
  if (end == BranchEnd::From) return {br.from, br.to, br.yff, br.yft};
  return {br.to, br.from, br.ytt, br.ytf};
}

// Row pattern of Y for matrices assembled without build_ybus.
std::vector<std::vector<std::size_t>> ybus_pattern(const AdmittanceMatrix& ybus) {
  const auto n = static_cast<std::size_t>(ybus.size());
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (i == k || ybus.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) != Complex(0.0, 0.0))
        rows[i].push_back(k);
  return rows;
}

}  // namespace

std::string_view to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::Pflow: return "Pflow";
    case MeasurementKind::Qflow: return "Qflow";
    case MeasurementKind::Pinj: return "Pinj";
    case MeasurementKind::Qinj: return "Qinj";
    case MeasurementKind::Vmag: return "Vmag";
  }
  return "?";
}

StateVector StateVector::from_operating_point(const OperatingPoint& op, std::size_t slack) {
  const auto n = static_cast<std::size_t>(op.v_mag.size());
  StateVector s;
  s.theta.resize(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 0; i < n; ++i)
    if (auto c = theta_column(i, slack); c >= 0) s.theta[c] = op.v_ang[static_cast<Eigen::Index>(i)] - op.v_ang[static_cast<Eigen::Index>(slack)];
  s.v_mag = op.v_mag;
  return s;
}

StateVector StateVector::flat(std::size_t n_buses) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_buses - 1)),
          Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_buses))};
}

StateVector StateVector::from_flat(const Eigen::VectorXd& x, std::size_t n_buses) {
  const auto n = static_cast<Eigen::Index>(n_buses);
  return {x.head(n - 1), x.tail(n)};
}

Eigen::VectorXd StateVector::flatten() const {
  Eigen::VectorXd x(theta.size() + v_mag.size());
  x << theta, v_mag;
  return x;
}

Eigen::VectorXd StateVector::angles(std::size_t slack) const {
  const auto n = static_cast<std::size_t>(v_mag.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    if (auto c = theta_column(i, slack); c >= 0) out[static_cast<Eigen::Index>(i)] = theta[c];
  return out;
}

Eigen::VectorXcd StateVector::phasors(std::size_t slack) const {
  const Eigen::VectorXd ang = angles(slack);
  Eigen::VectorXcd v(v_mag.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::polar(v_mag[i], ang[i]);
  return v;
}

MeasurementPlan default_measurement_plan(const AdmittanceMatrix& ybus, std::size_t slack) {
  MeasurementPlan plan;
  for (std::size_t k = 0; k < ybus.branches.size(); ++k) {
    plan.entries.push_back({MeasurementKind::Pflow, 0, k, BranchEnd::From});
    plan.entries.push_back({MeasurementKind::Qflow, 0, k, BranchEnd::From});
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(ybus.size()); ++i) {
    plan.entries.push_back({MeasurementKind::Pinj, i, 0, BranchEnd::From});
    plan.entries.push_back({MeasurementKind::Qinj, i, 0, BranchEnd::From});
  }
  plan.entries.push_back({MeasurementKind::Vmag, slack, 0, BranchEnd::From});
  plan.noise_sigma = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(plan.entries.size()));
  return plan;
}

std::vector<PhasorChannel> pmu_channels(const PmuPlan& pmu, const AdmittanceMatrix& ybus) {
  std::vector<std::size_t> buses = pmu.transmit_buses;
  std::sort(buses.begin(), buses.end());
  std::vector<PhasorChannel> out;
  for (std::size_t bus : buses) {
    out.push_back({bus, false, 0, BranchEnd::From});
    for (std::size_t k = 0; k < ybus.branches.size(); ++k) {
      if (ybus.branches[k].from == bus) out.push_back({bus, true, k, BranchEnd::From});
      if (ybus.branches[k].to == bus) out.push_back({bus, true, k, BranchEnd::To});
    }
  }
  return out;
}

void BlockCovariance::add_scalar(double sigma) {
  Block b;
  b.start = size_;
  b.dim = 1;
  b.cov(0, 0) = sigma * sigma;
  b.whitener(0, 0) = 1.0 / sigma;
  blocks_.push_back(b);
  size_ += 1;
}

void BlockCovariance::add_block(const Eigen::Matrix2d& cov) {
  Block b;
  b.start = size_;
  b.dim = 2;
  b.cov = cov;
  // Upper-triangular W with W^T W = cov^{-1}: the transposed Cholesky factor of the inverse.
  const Eigen::Matrix2d inverse = cov.inverse();
  b.whitener = Eigen::LLT<Eigen::Matrix2d>(inverse).matrixU();
  blocks_.push_back(b);
  size_ += 2;
}

Eigen::VectorXd BlockCovariance::whiten(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (const auto& b : blocks_) {
    const auto s = static_cast<Eigen::Index>(b.start);
    if (b.dim == 1)
      out[s] = b.whitener(0, 0) * v[s];
    else
      out.segment<2>(s) = b.whitener * v.segment<2>(s);
  }
  return out;
}

Eigen::MatrixXd BlockCovariance::whiten(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (const auto& b : blocks_) {
    const auto s = static_cast<Eigen::Index>(b.start);
    if (b.dim == 1)
      out.row(s) = b.whitener(0, 0) * m.row(s);
    else
      out.middleRows<2>(s) = b.whitener * m.middleRows<2>(s);
  }
  return out;
}

Eigen::MatrixXd BlockCovariance::dense() const {
  const auto n = static_cast<Eigen::Index>(size_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (const auto& b : blocks_) {
    const auto s = static_cast<Eigen::Index>(b.start);
    out.block(s, s, b.dim, b.dim) = b.cov.topLeftCorner(b.dim, b.dim);
  }
  return out;
}

BlockCovariance BlockCovariance::scaled(double variance_factor) const {
  BlockCovariance out = *this;
  const double w = 1.0 / std::sqrt(variance_factor);
  for (auto& b : out.blocks_) {
    b.cov *= variance_factor;
    b.whitener *= w;
  }
  return out;
}

Eigen::VectorXd measurement_function(const StateVector& s, const MeasurementPlan& plan,
                                     const AdmittanceMatrix& ybus, std::size_t slack) {
  const Eigen::VectorXcd v = s.phasors(slack);
  const Eigen::VectorXcd current = ybus.y * v;
  Eigen::VectorXd out(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t e = 0; e < plan.size(); ++e) {
    const Measurement& m = plan.entries[e];
    double value = 0.0;
    switch (m.kind) {
      case MeasurementKind::Pflow:
      case MeasurementKind::Qflow: {
        const BranchTerms t = branch_terms(ybus.branches[m.branch], m.end);
        const auto near = static_cast<Eigen::Index>(t.near);
        const auto far = static_cast<Eigen::Index>(t.far);
        const Complex flow = v[near] * std::conj(t.a_near * v[near] + t.a_far * v[far]);
        value = m.kind == MeasurementKind::Pflow ? flow.real() : flow.imag();
        break;
      }
      case MeasurementKind::Pinj:
      case MeasurementKind::Qinj: {
        const auto i = static_cast<Eigen::Index>(m.bus);
        const Complex inj = v[i] * std::conj(current[i]);
        value = m.kind == MeasurementKind::Pinj ? inj.real() : inj.imag();
        break;
      }
      case MeasurementKind::Vmag:
        value = s.v_mag[static_cast<Eigen::Index>(m.bus)];
        break;
    }
    out[static_cast<Eigen::Index>(e)] = value;
  }
  return out;
}

Eigen::MatrixXd measurement_jacobian(const StateVector& s, const MeasurementPlan& plan,
                                     const AdmittanceMatrix& ybus, std::size_t slack) {
  const auto n = static_cast<std::size_t>(ybus.size());
  const Eigen::VectorXcd v = s.phasors(slack);
  const Eigen::VectorXcd current = ybus.y * v;
  const auto local_pattern = ybus.pattern.size() == n ? decltype(ybus.pattern){} : ybus_pattern(ybus);
  const auto& pattern = ybus.pattern.size() == n ? ybus.pattern : local_pattern;
  auto dv_dtheta = [&](std::size_t k) { return kJ * v[static_cast<Eigen::Index>(k)]; };
  auto dv_dvmag = [&](std::size_t k) {
    const Complex vk = v[static_cast<Eigen::Index>(k)];
    return vk / std::abs(vk);
  };

  const auto dim = static_cast<Eigen::Index>(s.dimension());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(plan.size()), dim);
  Eigen::RowVectorXd re(dim), im(dim);
  for (std::size_t e = 0; e < plan.size(); ++e) {
    const Measurement& m = plan.entries[e];
    const auto row = static_cast<Eigen::Index>(e);
    if (m.kind == MeasurementKind::Vmag) {
      jac(row, vmag_column(m.bus, n)) = 1.0;
      continue;
    }
    re.setZero();
    im.setZero();
    ComplexGradient grad{re, im, slack, n};
    if (m.kind == MeasurementKind::Pflow || m.kind == MeasurementKind::Qflow) {
      // S = V_near conj(a_near V_near + a_far V_far)
      const BranchTerms t = branch_terms(ybus.branches[m.branch], m.end);
      const Complex vn = v[static_cast<Eigen::Index>(t.near)];
      const Complex i_near = t.a_near * vn + t.a_far * v[static_cast<Eigen::Index>(t.far)];
      grad.add(t.near, dv_dtheta(t.near) * std::conj(i_near) + vn * std::conj(t.a_near * dv_dtheta(t.near)),
               dv_dvmag(t.near) * std::conj(i_near) + vn * std::conj(t.a_near * dv_dvmag(t.near)));
      grad.add(t.far, vn * std::conj(t.a_far * dv_dtheta(t.far)), vn * std::conj(t.a_far * dv_dvmag(t.far)));
      jac.row(row) = m.kind == MeasurementKind::Pflow ? re : im;
    } else {
      // S_i = V_i conj(sum_k Y_ik V_k)
      const std::size_t i = m.bus;
      const auto ii = static_cast<Eigen::Index>(i);
      grad.add(i, dv_dtheta(i) * std::conj(current[ii]), dv_dvmag(i) * std::conj(current[ii]));
      for (std::size_t k : pattern[i]) {
        const Complex yik = ybus.y(ii, static_cast<Eigen::Index>(k));
        grad.add(k, v[ii] * std::conj(yik * dv_dtheta(k)), v[ii] * std::conj(yik * dv_dvmag(k)));
      }
      jac.row(row) = m.kind == MeasurementKind::Pinj ? re : im;
    }
  }
  return jac;
}

Complex channel_phasor(const StateVector& s, const PhasorChannel& channel, const AdmittanceMatrix& ybus,
                       std::size_t slack) {
  const Eigen::VectorXcd v = s.phasors(slack);
  if (!channel.is_current) return v[static_cast<Eigen::Index>(channel.bus)];
  const BranchTerms t = branch_terms(ybus.branches[channel.branch], channel.end);
  return t.a_near * v[static_cast<Eigen::Index>(t.near)] + t.a_far * v[static_cast<Eigen::Index>(t.far)];
}

Eigen::VectorXd pmu_measurement_function(const StateVector& s, const std::vector<PhasorChannel>& channels,
                                         const AdmittanceMatrix& ybus, std::size_t slack) {
  const Eigen::VectorXcd v = s.phasors(slack);
  Eigen::VectorXd out(static_cast<Eigen::Index>(2 * channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    Complex x;
    if (!channels[c].is_current) {
      x = v[static_cast<Eigen::Index>(channels[c].bus)];
    } else {
      const BranchTerms t = branch_terms(ybus.branches[channels[c].branch], channels[c].end);
      x = t.a_near * v[static_cast<Eigen::Index>(t.near)] + t.a_far * v[static_cast<Eigen::Index>(t.far)];
    }
    out[static_cast<Eigen::Index>(2 * c)] = x.real();
    out[static_cast<Eigen::Index>(2 * c + 1)] = x.imag();
  }
  return out;
}

Eigen::MatrixXd pmu_jacobian(const StateVector& s, const std::vector<PhasorChannel>& channels,
                             const AdmittanceMatrix& ybus, std::size_t slack) {
  const auto n = static_cast<std::size_t>(ybus.size());
  const Eigen::VectorXcd v = s.phasors(slack);
  const auto dim = static_cast<Eigen::Index>(s.dimension());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * channels.size()), dim);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    auto rows = jac.middleRows<2>(static_cast<Eigen::Index>(2 * c));
    ComplexGradient grad{rows.row(0), rows.row(1), slack, n};
    auto add_voltage = [&](std::size_t k, Complex coeff) {
      const Complex vk = v[static_cast<Eigen::Index>(k)];
      grad.add(k, coeff * kJ * vk, coeff * vk / std::abs(vk));
    };
    if (!channels[c].is_current) {
      add_voltage(channels[c].bus, 1.0);
    } else {
      const BranchTerms t = branch_terms(ybus.branches[channels[c].branch], channels[c].end);
      add_voltage(t.near, t.a_near);
      add_voltage(t.far, t.a_far);
    }
  }
  return jac;
}

void assign_scada_sigmas(MeasurementPlan& plan, const Eigen::VectorXd& noise_free, double v_fraction,
                         double power_fraction, double floor) {
  plan.noise_sigma.resize(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t e = 0; e < plan.size(); ++e) {
    const auto i = static_cast<Eigen::Index>(e);
    const double fraction = plan.entries[e].kind == MeasurementKind::Vmag ? v_fraction : power_fraction;
    plan.noise_sigma[i] = std::max(fraction * std::abs(noise_free[i]), floor);
  }
}

BlockCovariance scada_covariance(const MeasurementPlan& plan) {
  BlockCovariance cov;
  for (Eigen::Index i = 0; i < plan.noise_sigma.size(); ++i) cov.add_scalar(plan.noise_sigma[i]);
  return cov;
}

BlockCovariance pmu_covariance(const Eigen::VectorXcd& phasors, double magnitude_fraction, double angle_sigma_rad,
                               double floor) {
  BlockCovariance cov;
  for (Eigen::Index c = 0; c < phasors.size(); ++c) {
    const double mag = std::abs(phasors[c]);
    const double phi = std::arg(phasors[c]);
    const double radial = std::max(magnitude_fraction * mag, floor);
    const double tangential = std::max(mag, floor) * angle_sigma_rad;
    Eigen::Matrix2d rot;
    rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    const Eigen::Matrix2d polar = Eigen::Vector2d(radial * radial, tangential * tangential).asDiagonal();
    cov.add_block(rot * polar * rot.transpose());
  }
  return cov;
}

}  // namespace gridsense
