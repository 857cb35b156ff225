#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "selftomo/errors.hpp"

namespace selftomo {

using Complex = std::complex<double>;

/// Real 3-vector parameterizing a qubit state (s) or a dichotomic POVM (S).
/// Raw vectors of any length are allowed; physicality (|v| <= 1) is checked
/// where a state or POVM is actually built.
using BlochVector = Eigen::Vector3d;

/// 2x2 complex operator on a single qubit.
using QubitOperator = Eigen::Matrix2cd;

/// 4x4 complex operator on the two-mode system.
using FourLevelOperator = Eigen::Matrix4cd;

/// Pure two-qubit state, mode 1 on the most significant bit.
using TwoQubitState = Eigen::Vector4cd;

/// 3x3 orthogonal calibration matrix acting on Bloch vectors.
using Rotation3 = Eigen::Matrix3d;

/// Measurement basis label for the source and the reflection map.
enum class Basis { x, y, z };

inline constexpr Basis kAllBases[] = {Basis::x, Basis::y, Basis::z};

const char* to_string(Basis b);

/// Tolerance used by constructors and input validation.
inline constexpr double kValidationTol = 1e-12;

bool is_hermitian(const Eigen::Ref<const Eigen::MatrixXcd>& a, double tol = kValidationTol);
bool is_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& u, double tol = kValidationTol);
bool is_rotation(const Rotation3& r, double tol = kValidationTol);

QubitOperator pauli_identity();
QubitOperator pauli(Basis axis);

/// rho = (sigma0 + s.sigma)/2. Throws InvalidStateError if |s| > 1.
QubitOperator density_from_bloch(const BlochVector& s);

/// Delta(+), Delta(-) = (sigma0 +- S.sigma)/2, normalized so they sum to the
/// identity. Throws InvalidPovmError if |S| > 1.
std::pair<QubitOperator, QubitOperator> povm_from_bloch(const BlochVector& s);

/// tr(element * rho), clamped to a real number.
double born_probability(const QubitOperator& rho, const QubitOperator& element);

/// Kronecker product with the mode-1 factor on the left.
FourLevelOperator tensor(const QubitOperator& a, const QubitOperator& b);

/// Lifts a proper rotation R to the qubit unitary U with U (s.sigma) U^dag =
/// (R s).sigma. Returns the principal exponential (rotation angle in [0, pi]);
/// the global phase is irrelevant for every quantity computed downstream.
/// Throws ImproperRotationError when det R = -1.
QubitOperator rotation_to_unitary(const Rotation3& r);

/// Reflection of S in the coordinate plane selected by b:
///   b=x: (S1, S2, -S3),  b=y: (-S1, S2, S3),  b=z: (S1, -S2, S3).
BlochVector reflect(const BlochVector& s, Basis b);

/// Smallest eigenvalue of a Hermitian operator. Throws ValidationError for
/// non-Hermitian input.
double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXcd>& a,
                      double hermitian_tol = 1e-10);

} // namespace selftomo
