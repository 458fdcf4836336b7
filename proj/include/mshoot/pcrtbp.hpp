#pragma once

// Planar circular restricted 3-body problem in the rotating frame with
// inertial-velocity momenta. m1 = 1 - mu sits at (-mu, 0), m2 = mu at (1 - mu, 0).

#include <string>
#include <utility>

#include "mshoot/integrate.hpp"
#include "mshoot/linalg.hpp"
#include "mshoot/types.hpp"

namespace mshoot {

struct SystemModel {
  double mu = 0.0;
  std::string name;
  /// Throws Error unless mu is in [0, 0.5).
  void validate() const;
};

/// Mass ratio from the gravitational parameters of the two primaries.
double mass_ratio(double gm_primary, double gm_secondary);

enum class SectionKind { periapse, apoapse };
SectionKind parse_section_kind(const std::string& name);
const char* to_string(SectionKind kind);

struct OsculatingElements {
  double a = 0.0;
  double e = 0.0;
  double g = 0.0;   // rotating-frame longitude of periapse
  double nu = 0.0;  // true anomaly
  bool degenerate = false;  // e too small for g and nu to be defined
};

struct DelaunayCoords {
  double L = 0.0;
  double G = 0.0;
  double ell = 0.0;
  double g = 0.0;
};

/// Raised for states that are not bound about m1.
class UnboundError : public Error {
 public:
  using Error::Error;
};

class PcrtbpField final : public VectorField {
 public:
  explicit PcrtbpField(SystemModel model);
  const SystemModel& model() const { return model_; }
  int dimension() const override { return 4; }
  void eval(const double* x, double* dx) const override;
  bool has_jacobian() const override { return true; }
  void jacobian(const double* x, double* J) const override;
  bool has_jet() const override { return true; }
  void eval_jet(const std::vector<Jet>& x, std::vector<Jet>& dx) const override;

 private:
  SystemModel model_;
};

double hamiltonian(const SystemModel& model, const Vec4& s);
/// C = -2 H.
double jacobi(const SystemModel& model, const Vec4& s);
Vec4 eom(const SystemModel& model, const Vec4& s);
Vec4 jacobi_gradient(const SystemModel& model, const Vec4& s);
/// Newton steps along grad C back onto the level set jacobi = C.
Vec4 correct_energy(const SystemModel& model, Vec4 s, double C);
Mat4 eom_jacobian(const SystemModel& model, const Vec4& s);

/// sigma = (x + mu) px + y (py + mu) and its time derivative along the flow.
std::pair<double, double> sigma_pair(const SystemModel& model, const Vec4& s);

OsculatingElements osculating(const SystemModel& model, const Vec4& s);
/// Inverse element transform for prograde orbits about m1.
Vec4 state_from_elements(const SystemModel& model, const OsculatingElements& el);
DelaunayCoords delaunay(const SystemModel& model, const Vec4& s);
/// Mean anomaly from true anomaly.
double mean_anomaly(double nu, double e);

/// Time-reversal image (x, -y, -px, py).
Vec4 mirror(const Vec4& s);

/// Apse section about m1 with the true-anomaly proximity test.
EventSpec make_section(const SystemModel& model, SectionKind kind, double max_time = 4.0 * kPi);

/// Angular distance of nu from the apse value expected on the section.
double apse_anomaly_offset(const SystemModel& model, SectionKind kind, const Vec4& s);

inline Vec4 to_vec4(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }
inline std::vector<double> to_vector(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace mshoot
