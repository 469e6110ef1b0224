#include "capa/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

#include "capa/errors.hpp"

namespace capa {

namespace {

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<KeyValue> entries;
};

std::string trim(std::string_view text) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin]))
        ++begin;
    while (end > begin && is_space(text[end - 1]))
        --end;
    return std::string(text.substr(begin, end - begin));
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diagonal = up;
        }
    }
    return row[b.size()];
}

std::string suggest(const std::string& word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_distance = 3;  // suggest only close misses
    for (const std::string& candidate : candidates) {
        const std::size_t d = edit_distance(word, candidate);
        if (d < best_distance) {
            best_distance = d;
            best = candidate;
        }
    }
    return best;
}

class ErrorList {
public:
    void add(int line, const std::string& message) {
        messages_.push_back("line " + std::to_string(line) + ": " + message);
    }
    void add(const std::string& message) { messages_.push_back(message); }

    bool empty() const { return messages_.empty(); }

    [[noreturn]] void raise() const {
        std::string joined = "scenario validation failed:";
        for (const std::string& message : messages_)
            joined += "\n  - " + message;
        throw config_error(joined);
    }

private:
    std::vector<std::string> messages_;
};

const std::map<std::string, std::vector<std::string>>& known_sections() {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"carrier", {"frequency_hz"}},
        {"aperture.tx", {"center_m", "edges_m", "euler_deg"}},
        {"aperture.rx", {"center_m", "edges_m", "euler_deg"}},
        {"channel",
         {"kind", "polarization", "p_t", "p_r", "scatterer", "cells_per_axis", "tx_cluster",
          "rx_cluster", "k_factor"}},
        {"task.dof_sweep", {"distances_m", "threshold", "total_power_w", "noise_level_w"}},
        {"task.capacity", {"total_power_w", "noise_level_w", "epsilon"}},
        {"task.beamform", {"method", "user", "power_w", "noise_power", "target_db"}},
        {"task.estimate", {"pilots", "planted_atoms", "noise_level"}},
        {"task.channel_sample", {"rx_points_per_axis", "tx_points_per_axis"}},
        {"task.coupling", {"distances_m"}},
        {"task.power",
         {"ports_x", "ports_z", "surface_resistance_ohm", "extra_resistance_ohm", "trials"}},
        {"numerics", {"quadrature_order", "seed"}},
    };
    return table;
}

std::vector<Section> tokenize(const std::string& text, ErrorList& errors) {
    std::vector<Section> sections;
    std::istringstream stream(text);
    std::string raw_line;
    int line_number = 0;
    while (std::getline(stream, raw_line)) {
        ++line_number;
        std::string line = trim(raw_line);
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = trim(line.substr(0, hash));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.add(line_number, "unterminated section header '" + line + "'");
                continue;
            }
            Section section;
            section.name = trim(line.substr(1, line.size() - 2));
            section.line = line_number;
            sections.push_back(std::move(section));
            continue;
        }
        const auto equals = line.find('=');
        if (equals == std::string::npos) {
            errors.add(line_number, "expected 'key = value', got '" + line + "'");
            continue;
        }
        if (sections.empty()) {
            errors.add(line_number, "key outside any [section]");
            continue;
        }
        KeyValue kv;
        kv.key = trim(line.substr(0, equals));
        kv.value = trim(line.substr(equals + 1));
        kv.line = line_number;
        if (kv.key.empty()) {
            errors.add(line_number, "empty key");
            continue;
        }
        sections.back().entries.push_back(std::move(kv));
    }
    return sections;
}

// Access wrapper for one section: records which keys were consumed so the
// validator can report every unknown key afterwards.
class Binder {
public:
    Binder(const Section* section, ErrorList& errors)
        : section_(section), errors_(&errors) {}

    bool present() const { return section_ != nullptr; }

    const KeyValue* single(const std::string& key) {
        consumed_.insert(key);
        const KeyValue* found = nullptr;
        if (section_ == nullptr)
            return nullptr;
        for (const KeyValue& kv : section_->entries) {
            if (kv.key != key)
                continue;
            if (found != nullptr) {
                errors_->add(kv.line, "key '" + key + "' in [" + section_->name +
                                          "] may appear only once");
                return nullptr;
            }
            found = &kv;
        }
        return found;
    }

    std::vector<const KeyValue*> repeated(const std::string& key) {
        consumed_.insert(key);
        std::vector<const KeyValue*> found;
        if (section_ == nullptr)
            return found;
        for (const KeyValue& kv : section_->entries)
            if (kv.key == key)
                found.push_back(&kv);
        return found;
    }

    std::optional<double> number(const std::string& key) {
        const KeyValue* kv = single(key);
        if (kv == nullptr)
            return std::nullopt;
        return parse_number(*kv);
    }

    std::optional<std::vector<double>> numbers(const std::string& key, int expected = -1) {
        const KeyValue* kv = single(key);
        if (kv == nullptr)
            return std::nullopt;
        return parse_numbers(*kv, expected);
    }

    std::optional<std::string> word(const std::string& key,
                                    const std::vector<std::string>& allowed = {}) {
        const KeyValue* kv = single(key);
        if (kv == nullptr)
            return std::nullopt;
        if (!allowed.empty() &&
            std::find(allowed.begin(), allowed.end(), kv->value) == allowed.end()) {
            std::string joined;
            for (const std::string& a : allowed)
                joined += (joined.empty() ? "" : " | ") + a;
            errors_->add(kv->line, "key '" + key + "' in [" + section_->name + "] must be one of " +
                                       joined + ", got '" + kv->value + "'");
            return std::nullopt;
        }
        return kv->value;
    }

    std::optional<double> parse_number(const KeyValue& kv) {
        const auto values = parse_numbers(kv, 1);
        if (!values)
            return std::nullopt;
        return values->front();
    }

    std::optional<std::vector<double>> parse_numbers(const KeyValue& kv, int expected) {
        std::istringstream stream(kv.value);
        std::vector<double> values;
        std::string token;
        bool ok = true;
        while (stream >> token) {
            char* end = nullptr;
            const double value = std::strtod(token.c_str(), &end);
            if (end == nullptr || *end != '\0') {
                ok = false;
                break;
            }
            values.push_back(value);
        }
        if (!ok || values.empty()) {
            errors_->add(kv.line, "key '" + kv.key + "' in [" + section_->name +
                                      "] expects numbers, got '" + kv.value + "'");
            return std::nullopt;
        }
        if (expected >= 0 && static_cast<int>(values.size()) != expected) {
            errors_->add(kv.line, "key '" + kv.key + "' in [" + section_->name + "] expects " +
                                      std::to_string(expected) + " numbers, got " +
                                      std::to_string(values.size()));
            return std::nullopt;
        }
        return values;
    }

    void require(const std::string& key) {
        if (section_ == nullptr)
            return;
        for (const KeyValue& kv : section_->entries)
            if (kv.key == key)
                return;
        errors_->add(section_->line,
                     "section [" + section_->name + "] is missing required key '" + key + "'");
    }

    void finish() {
        if (section_ == nullptr)
            return;
        const auto& known = known_sections().at(section_->name);
        for (const KeyValue& kv : section_->entries) {
            if (consumed_.count(kv.key) > 0 ||
                std::find(known.begin(), known.end(), kv.key) != known.end())
                continue;
            std::string message =
                "unknown key '" + kv.key + "' in section [" + section_->name + "]";
            const std::string hint = suggest(kv.key, known);
            if (!hint.empty())
                message += "; did you mean '" + hint + "'?";
            errors_->add(kv.line, message);
        }
    }

private:
    const Section* section_;
    ErrorList* errors_;
    std::set<std::string> consumed_;
};

Eigen::Vector3d to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

PlanarAperture bind_aperture(const Section* section, const std::string& name,
                             ErrorList& errors) {
    Binder binder(section, errors);
    if (!binder.present()) {
        errors.add("missing required section [" + name + "]");
        return {};
    }
    binder.require("center_m");
    binder.require("edges_m");
    const auto center = binder.numbers("center_m", 3);
    const auto edges = binder.numbers("edges_m", 2);
    const auto euler = binder.numbers("euler_deg", 3);
    binder.finish();
    if (!center || !edges)
        return {};
    Orientation orientation;
    if (euler)
        orientation = orientation_from_euler((*euler)[0] * pi / 180.0, (*euler)[1] * pi / 180.0,
                                             (*euler)[2] * pi / 180.0);
    if (!((*edges)[0] > 0.0) || !((*edges)[1] > 0.0)) {
        errors.add("section [" + name + "]: edges_m must be positive");
        return {};
    }
    return make_aperture(to_vec3(*center), orientation, (*edges)[0], (*edges)[1]);
}

std::optional<ChannelSpec> bind_channel(const Section* section, ErrorList& errors) {
    if (section == nullptr)
        return std::nullopt;
    Binder binder(section, errors);
    ChannelSpec spec;
    const auto kind =
        binder.word("kind", {"los", "multipath", "correlation", "rician"});
    if (!kind)
        binder.require("kind");
    else if (*kind == "multipath")
        spec.kind = ChannelKind::multipath;
    else if (*kind == "correlation")
        spec.kind = ChannelKind::correlation;
    else if (*kind == "rician")
        spec.kind = ChannelKind::rician;

    if (const auto pol = binder.word("polarization", {"simplified", "matched"});
        pol && *pol == "matched")
        spec.polarization = PolarizationMode::matched;
    if (const auto p = binder.numbers("p_t", 3))
        spec.p_t = to_vec3(*p);
    if (const auto p = binder.numbers("p_r", 3))
        spec.p_r = to_vec3(*p);

    for (const KeyValue* kv : binder.repeated("scatterer")) {
        const auto values = binder.parse_numbers(*kv, 5);
        if (!values)
            continue;
        Scatterer scatterer;
        scatterer.position_m = to_vec3(*values);
        scatterer.gain = cplx((*values)[3], (*values)[4]);
        spec.scatterers.push_back(scatterer);
    }
    if (const auto cells = binder.number("cells_per_axis"))
        spec.cells_per_axis = static_cast<int>(*cells);
    const auto bind_clusters = [&](const char* key, std::vector<VmfCluster>& out) {
        for (const KeyValue* kv : binder.repeated(key)) {
            const auto values = binder.parse_numbers(*kv, 4);
            if (!values)
                continue;
            VmfCluster cluster;
            cluster.modal_theta_rad = (*values)[0] * pi / 180.0;
            cluster.modal_phi_rad = (*values)[1] * pi / 180.0;
            cluster.concentration = (*values)[2];
            cluster.weight = (*values)[3];
            out.push_back(cluster);
        }
    };
    bind_clusters("tx_cluster", spec.tx_clusters);
    bind_clusters("rx_cluster", spec.rx_clusters);
    if (const auto k = binder.number("k_factor"))
        spec.k_factor = *k;

    if (spec.kind == ChannelKind::multipath && spec.scatterers.empty())
        errors.add(section->line, "channel kind 'multipath' needs at least one scatterer");
    binder.finish();
    return spec;
}

TaskDetail bind_task(const Section& section, TaskKind kind, ErrorList& errors) {
    Binder binder(&section, errors);
    TaskDetail detail;
    switch (kind) {
    case TaskKind::dof_sweep: {
        DofSweepTask task;
        binder.require("distances_m");
        if (const auto d = binder.numbers("distances_m"))
            task.distances_m = *d;
        if (const auto t = binder.number("threshold"))
            task.threshold = *t;
        if (const auto p = binder.number("total_power_w"))
            task.total_power_w = *p;
        if (const auto n = binder.number("noise_level_w"))
            task.noise_level_w = *n;
        detail = task;
        break;
    }
    case TaskKind::capacity: {
        CapacityTask task;
        if (const auto p = binder.number("total_power_w"))
            task.total_power_w = *p;
        if (const auto n = binder.number("noise_level_w"))
            task.noise_level_w = *n;
        if (const auto e = binder.number("epsilon"))
            task.epsilon = *e;
        detail = task;
        break;
    }
    case TaskKind::beamform: {
        BeamformTask task;
        if (const auto m = binder.word("method", {"mrt", "zf", "mmse", "power_min"}))
            task.method = *m;
        binder.require("user");
        for (const KeyValue* kv : binder.repeated("user")) {
            if (const auto values = binder.parse_numbers(*kv, 3))
                task.users.push_back(to_vec3(*values));
        }
        if (const auto p = binder.number("power_w"))
            task.power_w = *p;
        if (const auto n = binder.number("noise_power"))
            task.noise_power = *n;
        if (const auto t = binder.number("target_db"))
            task.target_db = *t;
        detail = task;
        break;
    }
    case TaskKind::estimate: {
        EstimateTask task;
        if (const auto p = binder.number("pilots"))
            task.pilots = static_cast<int>(*p);
        if (const auto p = binder.number("planted_atoms"))
            task.planted_atoms = static_cast<int>(*p);
        if (const auto n = binder.number("noise_level"))
            task.noise_level = *n;
        detail = task;
        break;
    }
    case TaskKind::channel_sample: {
        ChannelSampleTask task;
        if (const auto p = binder.number("rx_points_per_axis"))
            task.rx_points_per_axis = static_cast<int>(*p);
        if (const auto p = binder.number("tx_points_per_axis"))
            task.tx_points_per_axis = static_cast<int>(*p);
        detail = task;
        break;
    }
    case TaskKind::coupling: {
        CouplingTask task;
        binder.require("distances_m");
        if (const auto d = binder.numbers("distances_m"))
            task.distances_m = *d;
        detail = task;
        break;
    }
    case TaskKind::power: {
        PowerTask task;
        if (const auto p = binder.number("ports_x"))
            task.ports_x = static_cast<int>(*p);
        if (const auto p = binder.number("ports_z"))
            task.ports_z = static_cast<int>(*p);
        if (const auto r = binder.number("surface_resistance_ohm"))
            task.surface_resistance_ohm = *r;
        if (const auto r = binder.number("extra_resistance_ohm"))
            task.extra_resistance_ohm = *r;
        if (const auto t = binder.number("trials"))
            task.trials = static_cast<int>(*t);
        detail = task;
        break;
    }
    }
    binder.finish();
    return detail;
}

TaskKind task_kind_from_section(const std::string& name) {
    if (name == "task.dof_sweep")
        return TaskKind::dof_sweep;
    if (name == "task.capacity")
        return TaskKind::capacity;
    if (name == "task.beamform")
        return TaskKind::beamform;
    if (name == "task.estimate")
        return TaskKind::estimate;
    if (name == "task.channel_sample")
        return TaskKind::channel_sample;
    if (name == "task.coupling")
        return TaskKind::coupling;
    return TaskKind::power;
}

} // namespace

const char* task_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::dof_sweep: return "dof_sweep";
    case TaskKind::capacity: return "capacity";
    case TaskKind::beamform: return "beamform";
    case TaskKind::estimate: return "estimate";
    case TaskKind::channel_sample: return "channel_sample";
    case TaskKind::coupling: return "coupling";
    case TaskKind::power: return "power";
    }
    return "unknown";
}

Scenario parse_scenario_text(const std::string& text) {
    ErrorList errors;
    const std::vector<Section> sections = tokenize(text, errors);

    std::vector<std::string> section_names;
    for (const auto& [name, keys] : known_sections())
        section_names.push_back(name);

    std::map<std::string, const Section*> by_name;
    std::vector<const Section*> task_sections;
    for (const Section& section : sections) {
        if (known_sections().count(section.name) == 0) {
            std::string message = "unknown section [" + section.name + "]";
            const std::string hint = suggest(section.name, section_names);
            if (!hint.empty())
                message += "; did you mean [" + hint + "]?";
            errors.add(section.line, message);
            continue;
        }
        if (by_name.count(section.name) > 0) {
            errors.add(section.line, "duplicate section [" + section.name + "]");
            continue;
        }
        by_name[section.name] = &section;
        if (section.name.rfind("task.", 0) == 0)
            task_sections.push_back(&section);
    }

    if (task_sections.empty())
        errors.add("exactly one [task.*] section is required, found none");
    else if (task_sections.size() > 1) {
        std::string names;
        for (const Section* s : task_sections)
            names += (names.empty() ? "" : ", ") + ("[" + s->name + "]");
        errors.add("exactly one [task.*] section is required, found " + names);
    }

    Scenario scenario;
    scenario.source_text = text;

    const auto find = [&](const char* name) -> const Section* {
        const auto it = by_name.find(name);
        return it == by_name.end() ? nullptr : it->second;
    };

    {
        Binder binder(find("carrier"), errors);
        if (!binder.present())
            errors.add("missing required section [carrier]");
        binder.require("frequency_hz");
        if (const auto f = binder.number("frequency_hz")) {
            if (*f > 0.0)
                scenario.carrier = make_carrier(*f);
            else
                errors.add("section [carrier]: frequency_hz must be positive");
        }
        binder.finish();
    }

    scenario.tx = bind_aperture(find("aperture.tx"), "aperture.tx", errors);
    scenario.rx = bind_aperture(find("aperture.rx"), "aperture.rx", errors);
    scenario.channel = bind_channel(find("channel"), errors);

    {
        Binder binder(find("numerics"), errors);
        if (const auto order = binder.number("quadrature_order")) {
            if (*order < 0.0 || *order > gl_max_order)
                errors.add("section [numerics]: quadrature_order must be in [0, " +
                           std::to_string(gl_max_order) + "]");
            else
                scenario.numerics.quadrature_order = static_cast<int>(*order);
        }
        if (const auto seed = binder.number("seed"))
            scenario.numerics.seed = static_cast<std::uint64_t>(*seed);
        binder.finish();
    }

    if (task_sections.size() == 1) {
        scenario.task = task_kind_from_section(task_sections.front()->name);
        scenario.detail = bind_task(*task_sections.front(), scenario.task, errors);
    }

    // Cross-block requirements.
    const bool needs_channel =
        scenario.task == TaskKind::capacity || scenario.task == TaskKind::channel_sample ||
        (scenario.task == TaskKind::estimate &&
         std::get_if<EstimateTask>(&scenario.detail) != nullptr &&
         std::get<EstimateTask>(scenario.detail).planted_atoms == 0);
    if (task_sections.size() == 1 && needs_channel && !scenario.channel)
        errors.add("task '" + std::string(task_name(scenario.task)) +
                   "' requires a [channel] section");
    if (scenario.task == TaskKind::dof_sweep && scenario.channel &&
        scenario.channel->kind != ChannelKind::los)
        errors.add("task 'dof_sweep' supports only a los [channel] section");

    if (!errors.empty())
        errors.raise();
    return scenario;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream stream(path);
    if (!stream)
        throw config_error("cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return parse_scenario_text(buffer.str());
}

} // namespace capa
