#include "selftomo/quantum_core.hpp"

#include <cmath>

namespace selftomo {

namespace {

constexpr Complex kI{0.0, 1.0};

} // namespace

const char* to_string(Basis b) {
    switch (b) {
        case Basis::x: return "x";
        case Basis::y: return "y";
        case Basis::z: return "z";
    }
    return "?";
}

bool is_hermitian(const Eigen::Ref<const Eigen::MatrixXcd>& a, double tol) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Eigen::Ref<const Eigen::MatrixXcd>& u, double tol) {
    Eigen::MatrixXcd gram = u.adjoint() * u;
    gram -= Eigen::MatrixXcd::Identity(u.cols(), u.cols());
    return gram.cwiseAbs().maxCoeff() <= tol;
}

bool is_rotation(const Rotation3& r, double tol) {
    Eigen::Matrix3d gram = r.transpose() * r - Eigen::Matrix3d::Identity();
    return gram.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

QubitOperator pauli_identity() {
    return QubitOperator::Identity();
}

QubitOperator pauli(Basis axis) {
    QubitOperator m;
    switch (axis) {
        case Basis::x:
            m << 0, 1, 1, 0;
            break;
        case Basis::y:
            m << 0, -kI, kI, 0;
            break;
        case Basis::z:
            m << 1, 0, 0, -1;
            break;
    }
    return m;
}

namespace {

QubitOperator bloch_dot_sigma(const BlochVector& v) {
    QubitOperator m;
    m << Complex{v.z(), 0.0}, Complex{v.x(), -v.y()},
         Complex{v.x(), v.y()}, Complex{-v.z(), 0.0};
    return m;
}

} // namespace

QubitOperator density_from_bloch(const BlochVector& s) {
    if (s.norm() > 1.0 + kValidationTol) {
        throw InvalidStateError("state Bloch vector has norm > 1");
    }
    return 0.5 * (pauli_identity() + bloch_dot_sigma(s));
}

std::pair<QubitOperator, QubitOperator> povm_from_bloch(const BlochVector& s) {
    if (s.norm() > 1.0 + kValidationTol) {
        throw InvalidPovmError("POVM Bloch vector has norm > 1");
    }
    const QubitOperator half_dot = 0.5 * bloch_dot_sigma(s);
    const QubitOperator half_id = 0.5 * pauli_identity();
    return {half_id + half_dot, half_id - half_dot};
}

double born_probability(const QubitOperator& rho, const QubitOperator& element) {
    return (element * rho).trace().real();
}

FourLevelOperator tensor(const QubitOperator& a, const QubitOperator& b) {
    FourLevelOperator out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        }
    }
    return out;
}

QubitOperator rotation_to_unitary(const Rotation3& r) {
    if (!is_rotation(r, 1e-10)) {
        if (std::abs(r.determinant() + 1.0) <= 1e-10) {
            throw ImproperRotationError("det R = -1: reflections have no unitary lift");
        }
        throw ValidationError("matrix is not orthogonal within tolerance");
    }

    // Quaternion extraction pivots on the largest diagonal combination, so it
    // stays accurate for every angle including half-turns, where an
    // angle-from-trace route loses half the significant digits. The unit
    // quaternion (w, v) = (cos(theta/2), sin(theta/2) n) is the lift itself:
    // U = w sigma0 - i v.sigma.
    Eigen::Quaterniond q(r);
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs(); // principal branch: angle in [0, pi]
    }
    QubitOperator u;
    u << Complex{q.w(), -q.z()}, Complex{-q.y(), -q.x()},
         Complex{q.y(), -q.x()}, Complex{q.w(), q.z()};
    return u;
}

BlochVector reflect(const BlochVector& s, Basis b) {
    switch (b) {
        case Basis::x: return {s.x(), s.y(), -s.z()};
        case Basis::y: return {-s.x(), s.y(), s.z()};
        case Basis::z: return {s.x(), -s.y(), s.z()};
    }
    return s;
}

double min_eigenvalue(const Eigen::Ref<const Eigen::MatrixXcd>& a, double hermitian_tol) {
    if (!is_hermitian(a, hermitian_tol)) {
        throw ValidationError("min_eigenvalue requires a Hermitian operator");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace selftomo
