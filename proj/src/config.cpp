#include "ager/config.hpp"

#include "ager/errors.hpp"
#include "ager/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace ager {

namespace {

struct Field {
    const char* name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int parse_int(const std::string& s) {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw ConfigError("bad integer: " + s);
    return v;
}

uint64_t parse_u64(const std::string& s) {
    size_t pos = 0;
    uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw ConfigError("bad integer: " + s);
    return v;
}

double parse_double(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("bad number: " + s);
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("bad bool: " + s);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(parse_int(tok));
    }
    return out;
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

#define INT_FIELD(f)                                                          \
    {#f, [](const RunConfig& c) { return std::to_string(c.f); },              \
     [](RunConfig& c, const std::string& s) { c.f = parse_int(s); }}
#define DBL_FIELD(f)                                                          \
    {#f, [](const RunConfig& c) { return fmt_double(c.f); },                  \
     [](RunConfig& c, const std::string& s) { c.f = parse_double(s); }}
#define BOOL_FIELD(f)                                                         \
    {#f, [](const RunConfig& c) { return c.f ? "true" : "false"; },           \
     [](RunConfig& c, const std::string& s) { c.f = parse_bool(s); }}
#define STR_FIELD(f)                                                          \
    {#f, [](const RunConfig& c) { return c.f; },                              \
     [](RunConfig& c, const std::string& s) { c.f = s; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        INT_FIELD(dim), INT_FIELD(heads), INT_FIELD(ffn_mult),
        INT_FIELD(centers_h1), INT_FIELD(centers_o1), INT_FIELD(centers_h2),
        INT_FIELD(centers_o2), INT_FIELD(sa_layers1), INT_FIELD(sa_layers2),
        INT_FIELD(decoder_layers), INT_FIELD(patterns), INT_FIELD(num_classes),
        INT_FIELD(num_verbs), INT_FIELD(d_pos), INT_FIELD(d_spa), INT_FIELD(d_cls),
        INT_FIELD(d_txt), INT_FIELD(d_word),
        DBL_FIELD(gate_threshold), DBL_FIELD(temperature),
        BOOL_FIELD(hard_assign), BOOL_FIELD(cue_switch), BOOL_FIELD(separate_query_pos),
        DBL_FIELD(lambda), DBL_FIELD(alpha_a), DBL_FIELD(alpha_e), DBL_FIELD(alpha_t),
        DBL_FIELD(focal_alpha), DBL_FIELD(focal_gamma), BOOL_FIELD(clamp_cos_weight),
        STR_FIELD(sim_metric),
        STR_FIELD(preset), INT_FIELD(batch), INT_FIELD(epochs),
        DBL_FIELD(lr_backbone), DBL_FIELD(lr), DBL_FIELD(weight_decay),
        {"decay_epochs",
         [](const RunConfig& c) { return fmt_int_list(c.decay_epochs); },
         [](RunConfig& c, const std::string& s) { c.decay_epochs = parse_int_list(s); }},
        DBL_FIELD(lr_decay_factor),
        {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& s) { c.seed = parse_u64(s); }},
        STR_FIELD(dtype),
        INT_FIELD(raster), INT_FIELD(train_scenes), INT_FIELD(test_scenes),
        DBL_FIELD(rare_verb_skew), STR_FIELD(data_root), STR_FIELD(text_table),
        STR_FIELD(word_table),
    };
    return table;
}

#undef INT_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

}  // namespace

void RunConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(dim, "dim");
    positive(heads, "heads");
    positive(centers_h1, "centers_h1");
    positive(centers_o1, "centers_o1");
    positive(centers_h2, "centers_h2");
    positive(centers_o2, "centers_o2");
    positive(sa_layers1, "sa_layers1");
    positive(sa_layers2, "sa_layers2");
    positive(decoder_layers, "decoder_layers");
    positive(patterns, "patterns");
    positive(num_classes, "num_classes");
    positive(num_verbs, "num_verbs");
    positive(batch, "batch");
    positive(epochs, "epochs");
    positive(temperature, "temperature");
    positive(lr, "lr");
    positive(lr_backbone, "lr_backbone");
    if (centers_h2 > centers_h1 || centers_o2 > centers_o1)
        throw ConfigError("center counts must be nonincreasing stage to stage");
    if (dim % heads != 0) throw ConfigError("dim must be divisible by heads");
    if (!(gate_threshold > 0 && gate_threshold < 1))
        throw ConfigError("gate_threshold must be in (0,1)");
    if (sim_metric != "weighted" && sim_metric != "ce" && sim_metric != "cos" &&
        sim_metric != "ce_plus_cos")
        throw ConfigError("sim_metric must be weighted|ce|cos|ce_plus_cos");
    if (dtype != "f32" && dtype != "f64") throw ConfigError("dtype must be f32|f64");
    if (raster % 32 != 0) throw ConfigError("raster must be divisible by 32");
}

std::string RunConfig::canonical_string() const {
    std::string out;
    for (const auto& f : fields()) {
        out += f.name;
        out += " = ";
        out += f.get(*this);
        out += "\n";
    }
    return out;
}

uint64_t RunConfig::hash() const { return fnv1a64(canonical_string()); }

double RunConfig::lr_at_epoch(int epoch, double base) const {
    double v = base;
    for (int d : decay_epochs)
        if (epoch >= d) v *= lr_decay_factor;
    return v;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (key == f.name) {
            f.set(config, value);
            if (key == "preset") {
                if (value == "paper") {
                    config.batch = 32;
                    config.epochs = 150;
                    config.decay_epochs = {80, 120};
                } else if (value != "desk") {
                    throw ConfigError("preset must be desk or paper");
                }
            }
            return;
        }
    }
    throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        apply_override(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace ager
