#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selftomo/joint_bell.hpp"
#include "selftomo/onoff.hpp"
#include "selftomo/protocol.hpp"
#include "selftomo/reconstruction.hpp"

namespace selftomo {

inline constexpr const char* kToolVersion = "selftomo 0.1.0";
inline constexpr int kFormatVersion = 1;

enum class Mode { qubit_selftomo, onoff, joint_bell };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// A calibration rotation together with the label it carries in documents:
/// "R0", "R1", or "custom<i>" for inline matrices.
struct RotationSpec {
    std::string label;
    Rotation3 matrix;
};

RotationSpec named_rotation(const std::string& name);

struct Tolerances {
    double symmetry = 1e-9;
    double clamp = 1e-6;
    double completeness = 1e-6;
};

struct ExperimentConfig {
    int version = 1;
    Mode mode = Mode::qubit_selftomo;

    // Detector under test; the field matching `mode` must be set.
    std::optional<BlochVector> bloch;
    std::optional<OnOffParams> onoff;
    std::optional<JointPOVM> joint;

    // Source programme.
    std::vector<Basis> bases{Basis::x, Basis::y, Basis::z};
    std::vector<RotationSpec> rotations{named_rotation("R0"), named_rotation("R1")};
    std::optional<double> xi;

    std::uint64_t shots = 0; // 0 = exact statistics
    std::uint64_t seed = 1;
    bool oracle_check = false;
    bool refine = false;
    bool analyze = false; // run the reconstruction / fit stage
    bool certify = false; // add the negativity certificate (joint-bell)
    Tolerances tolerances;

    /// Field-level checks for the selected mode. Throws ConfigError.
    void validate() const;
};

/// One simulated setting: the model table plus counts when sampling.
struct SettingTableEntry {
    Basis basis = Basis::z;
    std::string rotation_label = "R0";
    std::vector<double> probabilities;                     // 4 or 16 entries
    std::optional<std::vector<std::uint64_t>> counts;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
};

struct QubitResult {
    std::vector<SettingTableEntry> settings;
    std::optional<ReconstructionReport> reconstruction;
    std::optional<double> oracle_max_deviation;
};

struct OnOffResult {
    ClickTable table;
    std::optional<std::array<std::uint64_t, 4>> counts;
    std::optional<OnOffFit> fit;
    std::optional<double> oracle_max_deviation;
};

struct JointResult {
    std::vector<SettingTableEntry> settings;
    std::optional<JointReconstruction> tomography;
    std::optional<JointDecomposition> decomposition;
    std::optional<NegativityCertificate> certificate;
    std::optional<double> oracle_max_deviation;
};

struct ResultDocument {
    std::string generator = kToolVersion;
    int format_version = kFormatVersion;
    ExperimentConfig config;
    std::optional<QubitResult> qubit;
    std::optional<OnOffResult> onoff;
    std::optional<JointResult> joint;
};

/// Runs the pipeline selected by config.mode. Deterministic: a fixed
/// (config, seed) yields a byte-identical serialized document.
ResultDocument run_experiment(const ExperimentConfig& config);

/// JSON text with sorted keys and a trailing newline.
std::string serialize(const ResultDocument& doc);
ResultDocument deserialize(const std::string& text);

std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);

/// Flat table export. Column order: qubit "b,r,a1,a2,value", joint
/// "b,r,x1,y1,x2,y2,value", on/off "j,k,value". The value column holds
/// empirical frequencies when counts are present, model probabilities
/// otherwise. Documents without tables yield a header-only file.
std::string export_tables_csv(const ResultDocument& doc);

} // namespace selftomo
