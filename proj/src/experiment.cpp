#include "selftomo/experiment.hpp"

#include <charconv>
#include <cmath>
#include <span>

#include <json.hpp>

namespace selftomo {

using nlohmann::json;

const char* to_string(Mode m) {
    switch (m) {
        case Mode::qubit_selftomo: return "qubit-selftomo";
        case Mode::onoff: return "onoff";
        case Mode::joint_bell: return "joint-bell";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "qubit-selftomo") return Mode::qubit_selftomo;
    if (s == "onoff") return Mode::onoff;
    if (s == "joint-bell") return Mode::joint_bell;
    throw ConfigError("unknown mode '" + s + "'");
}

RotationSpec named_rotation(const std::string& name) {
    if (name == "R0") {
        return {"R0", rotation_r0()};
    }
    if (name == "R1") {
        return {"R1", rotation_r1()};
    }
    throw ConfigError("unknown rotation name '" + name + "' (expected R0 or R1)");
}

namespace {

Basis basis_from_string(const std::string& s) {
    if (s == "x") return Basis::x;
    if (s == "y") return Basis::y;
    if (s == "z") return Basis::z;
    throw ConfigError("unknown basis '" + s + "' (expected x, y, or z)");
}

json vec3_json(const Eigen::Vector3d& v) {
    return json::array({v[0], v[1], v[2]});
}

Eigen::Vector3d vec3_of(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError("field '" + field + "' must be an array of 3 numbers");
    }
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) {
            throw ConfigError("field '" + field + "' must be an array of 3 numbers");
        }
        v[i] = j[i].get<double>();
    }
    return v;
}

json rotation_json(const RotationSpec& r) {
    if (r.label == "R0" || r.label == "R1") {
        return r.label;
    }
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        rows.push_back(json::array({r.matrix(i, 0), r.matrix(i, 1), r.matrix(i, 2)}));
    }
    return rows;
}

RotationSpec rotation_of(const json& j, int index) {
    if (j.is_string()) {
        return named_rotation(j.get<std::string>());
    }
    if (j.is_array() && j.size() == 3) {
        Rotation3 m;
        for (int r = 0; r < 3; ++r) {
            if (!j[r].is_array() || j[r].size() != 3) {
                throw ConfigError("inline rotation must be a 3x3 array of numbers");
            }
            for (int c = 0; c < 3; ++c) {
                m(r, c) = j[r][c].get<double>();
            }
        }
        if (!is_rotation(m, 1e-9)) {
            throw ConfigError("inline rotation is not a proper orthogonal matrix");
        }
        return {"custom" + std::to_string(index), m};
    }
    throw ConfigError("rotation entries must be names or 3x3 arrays");
}

double require_number(const json& obj, const std::string& key) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw ConfigError("missing or non-numeric field '" + key + "'");
    }
    return obj[key].get<double>();
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

void ExperimentConfig::validate() const {
    if (version != 1) {
        throw ConfigError("unsupported config version " + std::to_string(version));
    }
    switch (mode) {
        case Mode::qubit_selftomo:
            if (!bloch) {
                throw ConfigError("qubit-selftomo mode needs detector.bloch");
            }
            if (bloch->norm() > 1.0 + kValidationTol) {
                throw ConfigError("detector.bloch must have norm <= 1");
            }
            break;
        case Mode::onoff:
            if (!onoff) {
                throw ConfigError("onoff mode needs detector.eta and detector.p_dark");
            }
            try {
                onoff->validate();
            } catch (const ValidationError& e) {
                throw ConfigError(std::string("detector: ") + e.what());
            }
            if (!xi) {
                throw ConfigError("onoff mode needs source.xi");
            }
            if (!(*xi >= 0.0 && *xi < 1.0)) {
                throw ConfigError("source.xi must lie in [0, 1)");
            }
            break;
        case Mode::joint_bell:
            if (!joint) {
                throw ConfigError("joint-bell mode needs the joint detector block");
            }
            try {
                joint->validate();
            } catch (const ValidationError& e) {
                throw ConfigError(std::string("detector: ") + e.what());
            }
            break;
    }
    for (const RotationSpec& r : rotations) {
        if (!is_rotation(r.matrix, 1e-9)) {
            throw ConfigError("rotation '" + r.label + "' is not a proper rotation");
        }
    }
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["version"] = c.version;
    j["mode"] = to_string(c.mode);

    json detector;
    if (c.bloch) {
        detector["bloch"] = vec3_json(*c.bloch);
    }
    if (c.onoff) {
        detector["eta"] = c.onoff->eta;
        detector["p_dark"] = c.onoff->p_dark;
    }
    if (c.joint) {
        detector["s_x"] = vec3_json(c.joint->s_x);
        detector["s_y"] = vec3_json(c.joint->s_y);
        detector["s_xy"] = vec3_json(c.joint->s_xy);
        detector["gamma_x"] = c.joint->gamma_x;
        detector["gamma_y"] = c.joint->gamma_y;
        detector["gamma_xy"] = c.joint->gamma_xy;
    }
    j["detector"] = detector;

    json source;
    json bases = json::array();
    for (Basis b : c.bases) {
        bases.push_back(to_string(b));
    }
    source["bases"] = bases;
    json rotations = json::array();
    for (const RotationSpec& r : c.rotations) {
        rotations.push_back(rotation_json(r));
    }
    source["rotations"] = rotations;
    if (c.xi) {
        source["xi"] = *c.xi;
    }
    j["source"] = source;

    j["shots"] = c.shots;
    j["seed"] = c.seed;
    j["oracle_check"] = c.oracle_check;
    j["refine"] = c.refine;
    j["analyze"] = c.analyze;
    j["certify"] = c.certify;
    j["tolerances"] = {{"symmetry", c.tolerances.symmetry},
                       {"clamp", c.tolerances.clamp},
                       {"completeness", c.tolerances.completeness}};
    return j;
}

ExperimentConfig config_of(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    ExperimentConfig c;
    if (!j.contains("version") || !j["version"].is_number_integer()) {
        throw ConfigError("config needs an integer 'version' field");
    }
    c.version = j["version"].get<int>();
    if (!j.contains("mode") || !j["mode"].is_string()) {
        throw ConfigError("config needs a string 'mode' field");
    }
    c.mode = mode_from_string(j["mode"].get<std::string>());

    if (j.contains("detector")) {
        const json& d = j["detector"];
        if (d.contains("bloch")) {
            c.bloch = vec3_of(d["bloch"], "detector.bloch");
        }
        if (d.contains("eta") || d.contains("p_dark")) {
            c.onoff = OnOffParams{require_number(d, "eta"), require_number(d, "p_dark")};
        }
        if (d.contains("s_x")) {
            JointPOVM joint;
            joint.s_x = vec3_of(d["s_x"], "detector.s_x");
            joint.s_y = vec3_of(d["s_y"], "detector.s_y");
            joint.s_xy = vec3_of(d["s_xy"], "detector.s_xy");
            joint.gamma_x = require_number(d, "gamma_x");
            joint.gamma_y = require_number(d, "gamma_y");
            joint.gamma_xy = require_number(d, "gamma_xy");
            c.joint = joint;
        }
    }

    if (j.contains("source")) {
        const json& s = j["source"];
        if (s.contains("bases")) {
            c.bases.clear();
            for (const json& b : s["bases"]) {
                if (!b.is_string()) {
                    throw ConfigError("source.bases entries must be strings");
                }
                c.bases.push_back(basis_from_string(b.get<std::string>()));
            }
        }
        if (s.contains("rotations")) {
            c.rotations.clear();
            int index = 0;
            for (const json& r : s["rotations"]) {
                c.rotations.push_back(rotation_of(r, index++));
            }
        }
        if (s.contains("xi")) {
            c.xi = require_number(s, "xi");
        }
    }

    if (j.contains("shots")) {
        c.shots = j["shots"].get<std::uint64_t>();
    }
    if (j.contains("seed")) {
        c.seed = j["seed"].get<std::uint64_t>();
    }
    c.oracle_check = j.value("oracle_check", false);
    c.refine = j.value("refine", false);
    c.analyze = j.value("analyze", false);
    c.certify = j.value("certify", false);
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        c.tolerances.symmetry = t.value("symmetry", c.tolerances.symmetry);
        c.tolerances.clamp = t.value("clamp", c.tolerances.clamp);
        c.tolerances.completeness = t.value("completeness", c.tolerances.completeness);
    }
    return c;
}

json setting_entry_json(const SettingTableEntry& e) {
    json j;
    j["basis"] = to_string(e.basis);
    j["rotation"] = e.rotation_label;
    j["probabilities"] = e.probabilities;
    if (e.counts) {
        j["counts"] = *e.counts;
        j["shots"] = e.shots;
        j["seed"] = e.seed;
    }
    return j;
}

SettingTableEntry setting_entry_of(const json& j) {
    SettingTableEntry e;
    e.basis = basis_from_string(j.at("basis").get<std::string>());
    e.rotation_label = j.at("rotation").get<std::string>();
    e.probabilities = j.at("probabilities").get<std::vector<double>>();
    if (j.contains("counts")) {
        e.counts = j["counts"].get<std::vector<std::uint64_t>>();
        e.shots = j.at("shots").get<std::uint64_t>();
        e.seed = j.at("seed").get<std::uint64_t>();
    }
    return e;
}

json reconstruction_json(const ReconstructionReport& r) {
    json j;
    j["estimate"] = vec3_json(r.estimate);
    j["pivot_axis"] = r.pivot_axis;
    j["clamped"] = r.clamped;
    j["residual"] = r.residual;
    j["refined"] = r.refined;
    if (r.statistical_sigma) {
        j["statistical_sigma"] = vec3_json(*r.statistical_sigma);
    }
    return j;
}

ReconstructionReport reconstruction_of(const json& j) {
    ReconstructionReport r;
    r.estimate = vec3_of(j.at("estimate"), "estimate");
    r.pivot_axis = j.at("pivot_axis").get<int>();
    r.clamped = j.at("clamped").get<bool>();
    r.residual = j.at("residual").get<double>();
    r.refined = j.at("refined").get<bool>();
    if (j.contains("statistical_sigma")) {
        r.statistical_sigma = vec3_of(j["statistical_sigma"], "statistical_sigma");
    }
    return r;
}

json fit_json(const OnOffFit& f) {
    json j;
    j["eta"] = f.params.eta;
    j["p_dark"] = f.params.p_dark;
    j["residual"] = f.residual;
    json candidates = json::array();
    for (const auto& c : f.eta_candidates) {
        if (c) {
            candidates.push_back(*c);
        }
    }
    j["eta_candidates"] = candidates;
    if (f.sigma_eta) {
        j["sigma_eta"] = *f.sigma_eta;
    }
    if (f.sigma_p_dark) {
        j["sigma_p_dark"] = *f.sigma_p_dark;
    }
    return j;
}

OnOffFit fit_of(const json& j) {
    OnOffFit f;
    f.params.eta = j.at("eta").get<double>();
    f.params.p_dark = j.at("p_dark").get<double>();
    f.residual = j.at("residual").get<double>();
    int i = 0;
    for (const json& c : j.at("eta_candidates")) {
        if (i < 2) {
            f.eta_candidates[i++] = c.get<double>();
        }
    }
    if (j.contains("sigma_eta")) {
        f.sigma_eta = j["sigma_eta"].get<double>();
    }
    if (j.contains("sigma_p_dark")) {
        f.sigma_p_dark = j["sigma_p_dark"].get<double>();
    }
    return f;
}

json click_table_json(const ClickTable& t) {
    return {{"nn", t.p_nn}, {"cn", t.p_cn}, {"nc", t.p_nc}, {"cc", t.p_cc}};
}

ClickTable click_table_of(const json& j) {
    return {j.at("nn").get<double>(), j.at("cn").get<double>(),
            j.at("nc").get<double>(), j.at("cc").get<double>()};
}

json tomography_json(const JointReconstruction& t) {
    json vectors = json::array();
    for (const auto& v : t.vectors.vectors) {
        vectors.push_back(vec3_json(v));
    }
    return {{"outcome_vectors", vectors},
            {"completeness_residual", t.completeness_residual},
            {"flipped", t.flipped}};
}

JointReconstruction tomography_of(const json& j) {
    JointReconstruction t;
    const json& vectors = j.at("outcome_vectors");
    for (int i = 0; i < 4; ++i) {
        t.vectors.vectors[i] = vec3_of(vectors.at(i), "outcome_vectors");
    }
    t.completeness_residual = j.at("completeness_residual").get<double>();
    t.flipped = j.at("flipped").get<bool>();
    return t;
}

json component_json(const RecoveredComponent& c) {
    json j;
    j["gamma"] = c.gamma;
    if (c.direction) {
        j["direction"] = vec3_json(*c.direction);
    }
    return j;
}

RecoveredComponent component_of(const json& j) {
    RecoveredComponent c;
    c.gamma = j.at("gamma").get<double>();
    if (j.contains("direction")) {
        c.direction = vec3_of(j["direction"], "direction");
    }
    return c;
}

json certificate_json(const NegativityCertificate& c) {
    return {{"min_entry", c.min_entry},
            {"setting", {{"basis", to_string(c.min_entry_setting.basis)},
                         {"r", c.min_entry_setting.r}}},
            {"outcome", c.min_entry_outcome},
            {"min_eigenvalue", c.min_eigenvalue},
            {"max_vector_norm", c.max_vector_norm},
            {"nonclassical", c.nonclassical}};
}

NegativityCertificate certificate_of(const json& j) {
    NegativityCertificate c;
    c.min_entry = j.at("min_entry").get<double>();
    c.min_entry_setting.basis = basis_from_string(j.at("setting").at("basis").get<std::string>());
    c.min_entry_setting.r = j.at("setting").at("r").get<int>();
    const json& outcome = j.at("outcome");
    for (int i = 0; i < 4; ++i) {
        c.min_entry_outcome[i] = outcome.at(i).get<int>();
    }
    c.min_eigenvalue = j.at("min_eigenvalue").get<double>();
    c.max_vector_norm = j.at("max_vector_norm").get<double>();
    c.nonclassical = j.at("nonclassical").get<bool>();
    return c;
}

json document_json(const ResultDocument& doc) {
    json j;
    j["generator"] = doc.generator;
    j["format_version"] = doc.format_version;
    j["config"] = config_json(doc.config);

    if (doc.qubit) {
        json q;
        json settings = json::array();
        for (const auto& e : doc.qubit->settings) {
            settings.push_back(setting_entry_json(e));
        }
        q["settings"] = settings;
        if (doc.qubit->reconstruction) {
            q["reconstruction"] = reconstruction_json(*doc.qubit->reconstruction);
        }
        if (doc.qubit->oracle_max_deviation) {
            q["oracle_max_deviation"] = *doc.qubit->oracle_max_deviation;
        }
        j["qubit"] = q;
    }

    if (doc.onoff) {
        json o;
        o["table"] = click_table_json(doc.onoff->table);
        if (doc.onoff->counts) {
            o["counts"] = *doc.onoff->counts;
        }
        if (doc.onoff->fit) {
            o["fit"] = fit_json(*doc.onoff->fit);
        }
        if (doc.onoff->oracle_max_deviation) {
            o["oracle_max_deviation"] = *doc.onoff->oracle_max_deviation;
        }
        j["onoff"] = o;
    }

    if (doc.joint) {
        json g;
        json settings = json::array();
        for (const auto& e : doc.joint->settings) {
            settings.push_back(setting_entry_json(e));
        }
        g["settings"] = settings;
        if (doc.joint->tomography) {
            g["tomography"] = tomography_json(*doc.joint->tomography);
        }
        if (doc.joint->decomposition) {
            g["decomposition"] = {{"x", component_json(doc.joint->decomposition->x)},
                                  {"y", component_json(doc.joint->decomposition->y)},
                                  {"xy", component_json(doc.joint->decomposition->xy)}};
        }
        if (doc.joint->certificate) {
            g["certificate"] = certificate_json(*doc.joint->certificate);
        }
        if (doc.joint->oracle_max_deviation) {
            g["oracle_max_deviation"] = *doc.joint->oracle_max_deviation;
        }
        j["joint"] = g;
    }
    return j;
}

ResultDocument document_of(const json& j) {
    ResultDocument doc;
    doc.generator = j.at("generator").get<std::string>();
    doc.format_version = j.at("format_version").get<int>();
    doc.config = config_of(j.at("config"));

    if (j.contains("qubit")) {
        QubitResult q;
        for (const json& e : j["qubit"].at("settings")) {
            q.settings.push_back(setting_entry_of(e));
        }
        if (j["qubit"].contains("reconstruction")) {
            q.reconstruction = reconstruction_of(j["qubit"]["reconstruction"]);
        }
        if (j["qubit"].contains("oracle_max_deviation")) {
            q.oracle_max_deviation = j["qubit"]["oracle_max_deviation"].get<double>();
        }
        doc.qubit = std::move(q);
    }
    if (j.contains("onoff")) {
        OnOffResult o;
        o.table = click_table_of(j["onoff"].at("table"));
        if (j["onoff"].contains("counts")) {
            const json& counts = j["onoff"]["counts"];
            std::array<std::uint64_t, 4> arr{};
            for (int i = 0; i < 4; ++i) {
                arr[i] = counts.at(i).get<std::uint64_t>();
            }
            o.counts = arr;
        }
        if (j["onoff"].contains("fit")) {
            o.fit = fit_of(j["onoff"]["fit"]);
        }
        if (j["onoff"].contains("oracle_max_deviation")) {
            o.oracle_max_deviation = j["onoff"]["oracle_max_deviation"].get<double>();
        }
        doc.onoff = std::move(o);
    }
    if (j.contains("joint")) {
        JointResult g;
        for (const json& e : j["joint"].at("settings")) {
            g.settings.push_back(setting_entry_of(e));
        }
        if (j["joint"].contains("tomography")) {
            g.tomography = tomography_of(j["joint"]["tomography"]);
        }
        if (j["joint"].contains("decomposition")) {
            const json& d = j["joint"]["decomposition"];
            JointDecomposition dec;
            dec.x = component_of(d.at("x"));
            dec.y = component_of(d.at("y"));
            dec.xy = component_of(d.at("xy"));
            g.decomposition = dec;
        }
        if (j["joint"].contains("certificate")) {
            g.certificate = certificate_of(j["joint"]["certificate"]);
        }
        if (j["joint"].contains("oracle_max_deviation")) {
            g.oracle_max_deviation = j["joint"]["oracle_max_deviation"].get<double>();
        }
        doc.joint = std::move(g);
    }
    return doc;
}

// The analysis stage needs the six standard settings; map whatever order the
// config listed them in back onto (b, r).
struct StandardIndex {
    std::array<int, 6> flat_index;
};

StandardIndex require_standard_settings(const ExperimentConfig& c) {
    if (c.bases.size() != 3 || c.rotations.size() != 2) {
        throw ConfigError("analysis needs bases {x, y, z} and rotations {R0, R1}");
    }
    StandardIndex idx;
    idx.flat_index.fill(-1);
    for (std::size_t bi = 0; bi < c.bases.size(); ++bi) {
        for (std::size_t ri = 0; ri < c.rotations.size(); ++ri) {
            const std::string& label = c.rotations[ri].label;
            if (label != "R0" && label != "R1") {
                throw ConfigError("analysis needs the named rotations R0 and R1");
            }
            const int r = label == "R0" ? 0 : 1;
            const int flat = static_cast<int>(bi * c.rotations.size() + ri);
            idx.flat_index[setting_index(c.bases[bi], r)] = flat;
        }
    }
    for (int i : idx.flat_index) {
        if (i < 0) {
            throw ConfigError("analysis needs every (basis, rotation) pair exactly once");
        }
    }
    return idx;
}

void run_qubit(const ExperimentConfig& c, ResultDocument& doc) {
    const BlochVector s = *c.bloch;
    QubitResult result;
    double oracle_dev = 0.0;

    std::vector<JointProbTable> tables;
    std::vector<ShotRecord> records;
    int flat = 0;
    for (Basis b : c.bases) {
        for (const RotationSpec& rot : c.rotations) {
            const ProtocolSetting setting{b, rot.matrix};
            const JointProbTable model = joint_statistics_closed(s, s, setting);
            if (c.oracle_check) {
                const JointProbTable oracle = joint_statistics_oracle(s, s, setting);
                for (int i = 0; i < 4; ++i) {
                    oracle_dev = std::max(oracle_dev, std::abs(model.p[i] - oracle.p[i]));
                }
            }
            SettingTableEntry entry;
            entry.basis = b;
            entry.rotation_label = rot.label;
            entry.probabilities.assign(model.p.begin(), model.p.end());
            if (c.shots > 0) {
                const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(flat);
                const ShotRecord rec = sample_counts(model, c.shots, seed);
                entry.counts = std::vector<std::uint64_t>(rec.counts.begin(), rec.counts.end());
                entry.shots = rec.shots;
                entry.seed = rec.seed;
                records.push_back(rec);
            }
            tables.push_back(model);
            result.settings.push_back(std::move(entry));
            ++flat;
        }
    }
    if (c.oracle_check) {
        result.oracle_max_deviation = oracle_dev;
    }

    if (c.analyze) {
        const StandardIndex idx = require_standard_settings(c);
        ReconstructionOptions opts;
        opts.clamp_eps = c.tolerances.clamp;
        opts.refine = c.refine;
        if (c.shots == 0) {
            SettingProbabilities p;
            for (const SettingId& id : kSixSettings) {
                const int i = idx.flat_index[setting_index(id.basis, id.r)];
                p.at(id.basis, id.r) = reduce_table(tables[i], c.tolerances.symmetry);
            }
            result.reconstruction = reconstruct_bloch(p, opts);
        } else {
            SettingCounts counts;
            for (const SettingId& id : kSixSettings) {
                const int i = idx.flat_index[setting_index(id.basis, id.r)];
                counts.at(id.basis, id.r) = records[i];
            }
            result.reconstruction = reconstruct_from_counts(counts, opts);
        }
    }
    doc.qubit = std::move(result);
}

void run_onoff(const ExperimentConfig& c, ResultDocument& doc) {
    const OnOffParams d = *c.onoff;
    const SqueezedVacuumParams source = SqueezedVacuumParams::from_xi(*c.xi);
    OnOffResult result;
    result.table = click_probabilities_closed(d, source);
    if (c.oracle_check) {
        const ClickTable oracle = click_probabilities_oracle(d, source, 1e-12);
        result.oracle_max_deviation =
            std::max({std::abs(result.table.p_nn - oracle.p_nn),
                      std::abs(result.table.p_cn - oracle.p_cn),
                      std::abs(result.table.p_nc - oracle.p_nc),
                      std::abs(result.table.p_cc - oracle.p_cc)});
    }
    if (c.shots > 0) {
        const auto probs = result.table.as_array();
        const auto counts =
            draw_categorical(std::span<const double>(probs.data(), 4), c.shots, c.seed);
        std::array<std::uint64_t, 4> arr{};
        std::copy(counts.begin(), counts.end(), arr.begin());
        result.counts = arr;
    }
    if (c.analyze) {
        if (source.nbar == 0.0) {
            throw EtaUnidentifiableError("source.xi = 0 leaves eta undetermined");
        }
        result.fit = c.shots == 0 ? fit_onoff(result.table, source.nbar)
                                  : fit_onoff_counts(*result.counts, source.nbar);
    }
    doc.onoff = std::move(result);
}

void run_joint(const ExperimentConfig& c, ResultDocument& doc) {
    const JointPOVM j = *c.joint;
    JointResult result;
    double oracle_dev = 0.0;

    std::vector<FuzzyJointTable> model_tables;
    std::vector<FuzzyJointTable> analysis_tables;
    int flat = 0;
    for (Basis b : c.bases) {
        for (const RotationSpec& rot : c.rotations) {
            const ProtocolSetting setting{b, rot.matrix};
            const FuzzyJointTable model = fuzzy_joint_statistics(j, setting);
            if (c.oracle_check) {
                const FuzzyJointTable oracle = fuzzy_joint_statistics_oracle(j, setting);
                for (int i = 0; i < 16; ++i) {
                    oracle_dev = std::max(oracle_dev, std::abs(model.p[i] - oracle.p[i]));
                }
            }
            SettingTableEntry entry;
            entry.basis = b;
            entry.rotation_label = rot.label;
            entry.probabilities.assign(model.p.begin(), model.p.end());

            FuzzyJointTable analysis = model;
            if (c.shots > 0) {
                const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(flat);
                const auto counts = draw_categorical(
                    std::span<const double>(model.p.data(), 16), c.shots, seed);
                entry.counts = counts;
                entry.shots = c.shots;
                entry.seed = seed;
                for (int i = 0; i < 16; ++i) {
                    analysis.p[i] =
                        static_cast<double>(counts[i]) / static_cast<double>(c.shots);
                }
            }
            model_tables.push_back(model);
            analysis_tables.push_back(analysis);
            result.settings.push_back(std::move(entry));
            ++flat;
        }
    }
    if (c.oracle_check) {
        result.oracle_max_deviation = oracle_dev;
    }

    if (c.analyze || c.certify) {
        const StandardIndex idx = require_standard_settings(c);
        JointSettingTables tables;
        for (const SettingId& id : kSixSettings) {
            tables.at(id.basis, id.r) =
                analysis_tables[idx.flat_index[setting_index(id.basis, id.r)]];
        }
        JointReconstructionOptions opts;
        opts.clamp_eps = c.tolerances.clamp;
        opts.completeness_tol = c.tolerances.completeness;
        if (c.shots > 0) {
            // Shot noise scales: widen the clamp and completeness thresholds.
            const double noise = 1.0 / std::sqrt(static_cast<double>(c.shots));
            opts.clamp_eps = std::max(opts.clamp_eps, 3.0 * noise);
            opts.completeness_tol = std::max(opts.completeness_tol, 30.0 * noise);
        }
        const JointReconstruction tomo = reconstruct_outcome_vectors(tables, opts);
        const JointDecomposition dec = decompose(tomo.vectors);
        result.tomography = tomo;
        result.decomposition = dec;
        if (c.certify) {
            // Shot noise can push a recovered boundary POVM just outside the
            // valid set; shrink the accuracy factors back onto it.
            JointPOVM recovered = dec.as_povm();
            double top = 0.0;
            for (const auto& [x, y] : kOutcomePairs) {
                top = std::max(top, (x * recovered.gamma_x * recovered.s_x +
                                     y * recovered.gamma_y * recovered.s_y +
                                     x * y * recovered.gamma_xy * recovered.s_xy).norm());
            }
            if (top > 1.0 + kValidationTol) {
                const double shrink = (1.0 - 1e-12) / top;
                recovered.gamma_x *= shrink;
                recovered.gamma_y *= shrink;
                recovered.gamma_xy *= shrink;
            }
            const QuasiPOVM quasi = invert(recovered);
            result.certificate = negativity_report(
                quasi, std::vector<SettingId>(kSixSettings.begin(), kSixSettings.end()));
        }
    }
    doc.joint = std::move(result);
}

} // namespace

ResultDocument run_experiment(const ExperimentConfig& config) {
    config.validate();
    ResultDocument doc;
    doc.config = config;
    switch (config.mode) {
        case Mode::qubit_selftomo:
            run_qubit(config, doc);
            break;
        case Mode::onoff:
            run_onoff(config, doc);
            break;
        case Mode::joint_bell:
            run_joint(config, doc);
            break;
    }
    return doc;
}

std::string serialize(const ResultDocument& doc) {
    return document_json(doc).dump(2) + "\n";
}

ResultDocument deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    try {
        return document_of(j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed result document: ") + e.what());
    }
}

std::string serialize_config(const ExperimentConfig& config) {
    return config_json(config).dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    try {
        return config_of(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
}

namespace {

std::string rotation_column(const std::string& label) {
    if (label.size() > 1 && label[0] == 'R' &&
        label.find_first_not_of("0123456789", 1) == std::string::npos) {
        return label.substr(1);
    }
    return label;
}

void append_entry_rows(std::string& out, const SettingTableEntry& e, bool joint) {
    std::vector<double> values;
    if (e.counts) {
        values.reserve(e.counts->size());
        for (std::uint64_t n : *e.counts) {
            values.push_back(static_cast<double>(n) / static_cast<double>(e.shots));
        }
    } else {
        values = e.probabilities;
    }
    const std::string prefix =
        std::string(to_string(e.basis)) + "," + rotation_column(e.rotation_label) + ",";
    if (joint) {
        for (const auto& [x1, y1] : kOutcomePairs) {
            for (const auto& [x2, y2] : kOutcomePairs) {
                const int i = JointOutcomeTable::index_of(x1, y1, x2, y2);
                out += prefix + std::to_string(x1) + "," + std::to_string(y1) + "," +
                       std::to_string(x2) + "," + std::to_string(y2) + "," +
                       format_double(values[static_cast<std::size_t>(i)]) + "\n";
            }
        }
    } else {
        for (const auto& [a1, a2] : kOutcomePairs) {
            const int i = JointProbTable::index_of(a1, a2);
            out += prefix + std::to_string(a1) + "," + std::to_string(a2) + "," +
                   format_double(values[static_cast<std::size_t>(i)]) + "\n";
        }
    }
}

} // namespace

std::string export_tables_csv(const ResultDocument& doc) {
    std::string out;
    if (doc.onoff) {
        out = "j,k,value\n";
        const OnOffResult& o = *doc.onoff;
        std::array<double, 4> values = o.table.as_array();
        if (o.counts) {
            double total = 0.0;
            for (std::uint64_t n : *o.counts) {
                total += static_cast<double>(n);
            }
            for (int i = 0; i < 4; ++i) {
                values[i] = total > 0.0 ? static_cast<double>((*o.counts)[i]) / total : 0.0;
            }
        }
        // Row order matches the ClickTable fields: (-,-), (+,-), (-,+), (+,+).
        constexpr int kJ[4] = {-1, +1, -1, +1};
        constexpr int kK[4] = {-1, -1, +1, +1};
        for (int i = 0; i < 4; ++i) {
            out += std::to_string(kJ[i]) + "," + std::to_string(kK[i]) + "," +
                   format_double(values[i]) + "\n";
        }
        return out;
    }
    if (doc.joint) {
        out = "b,r,x1,y1,x2,y2,value\n";
        for (const auto& e : doc.joint->settings) {
            append_entry_rows(out, e, true);
        }
        return out;
    }
    out = "b,r,a1,a2,value\n";
    if (doc.qubit) {
        for (const auto& e : doc.qubit->settings) {
            append_entry_rows(out, e, false);
        }
    }
    return out;
}

} // namespace selftomo
