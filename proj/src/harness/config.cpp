#include "smokeynet/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace smokeynet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (in.fail() || !in.eof()) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(10);
    out << v;
    return out.str();
}

std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define SN_FIELD(expr, parse)                                                                   \
    Field {                                                                                     \
        [](RunConfig& c, const std::string& k, const std::string& v) { expr = parse; },         \
            [](const RunConfig& c) { return fmt(expr); }                                        \
    }

#define SN_TEXT(expr)                                                                           \
    Field {                                                                                     \
        [](RunConfig& c, const std::string&, const std::string& v) { expr = v; },               \
            [](const RunConfig& c) { return std::string(expr); }                                \
    }

#define SN_ENUM(expr, parser)                                                                   \
    Field {                                                                                     \
        [](RunConfig& c, const std::string&, const std::string& v) { expr = parser(v); },       \
            [](const RunConfig& c) { return std::string(to_string(expr)); }                     \
    }

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = {
        {"data.archive", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.data.archive = v; },
                               [](const RunConfig& c) { return c.data.archive.string(); }}},
        {"data.manifest", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.data.manifest = v; },
                                [](const RunConfig& c) { return c.data.manifest.string(); }}},
        {"data.geometry", SN_TEXT(c.data.geometry)},
        {"data.resize_percent", SN_FIELD(c.data.resize_percent, parse_number<int>(k, v))},
        {"data.tile_threshold", SN_FIELD(c.data.tile_threshold, parse_number<int>(k, v))},
        {"data.background", SN_TEXT(c.data.background)},
        {"data.cache_frames", SN_FIELD(c.data.cache_frames, parse_number<int>(k, v))},
        {"data.augment", SN_FIELD(c.data.augment, parse_bool(k, v))},
        {"data.flip_probability", SN_FIELD(c.data.augmentation.flip_probability, parse_number<double>(k, v))},
        {"data.crop_probability", SN_FIELD(c.data.augmentation.crop_probability, parse_number<double>(k, v))},
        {"data.crop_max_fraction", SN_FIELD(c.data.augmentation.crop_max_fraction, parse_number<double>(k, v))},
        {"data.color_probability", SN_FIELD(c.data.augmentation.color_probability, parse_number<double>(k, v))},
        {"data.color_magnitude", SN_FIELD(c.data.augmentation.color_magnitude, parse_number<double>(k, v))},
        {"data.brightness_contrast_probability",
         SN_FIELD(c.data.augmentation.brightness_contrast_probability, parse_number<double>(k, v))},
        {"data.brightness_contrast_magnitude",
         SN_FIELD(c.data.augmentation.brightness_contrast_magnitude, parse_number<double>(k, v))},
        {"data.blur_probability", SN_FIELD(c.data.augmentation.blur_probability, parse_number<double>(k, v))},
        {"data.blur_max_radius", SN_FIELD(c.data.augmentation.blur_max_radius, parse_number<int>(k, v))},

        {"model.backbone", SN_ENUM(c.model.backbone, parse_backbone)},
        {"model.temporal", SN_ENUM(c.model.temporal, parse_temporal)},
        {"model.spatial", SN_ENUM(c.model.spatial, parse_spatial)},
        {"model.num_frames", SN_FIELD(c.model.num_frames, parse_number<int>(k, v))},
        {"model.extra_channel", SN_ENUM(c.model.extra_channel, parse_extra_channel)},
        {"model.image_head", SN_ENUM(c.model.image_head, parse_image_head)},
        {"model.pretrained_backbone", SN_FIELD(c.model.pretrained_backbone, parse_bool(k, v))},
        {"model.pretrained_weights", SN_TEXT(c.model.pretrained_weights)},
        {"model.vit_depth", SN_FIELD(c.model.vit_depth, parse_number<int>(k, v))},
        {"model.vit_heads", SN_FIELD(c.model.vit_heads, parse_number<int>(k, v))},
        {"model.vit_width_cap", SN_FIELD(c.model.vit_width_cap, parse_number<int>(k, v))},
        {"model.vit_mlp_ratio", SN_FIELD(c.model.vit_mlp_ratio, parse_number<int>(k, v))},
        {"model.positional_embedding", SN_FIELD(c.model.positional_embedding, parse_bool(k, v))},
        {"model.temporal_transformer_depth", SN_FIELD(c.model.temporal_transformer_depth, parse_number<int>(k, v))},
        {"model.temporal_transformer_heads", SN_FIELD(c.model.temporal_transformer_heads, parse_number<int>(k, v))},
        {"model.dropout", SN_FIELD(c.model.dropout, parse_number<double>(k, v))},
        {"model.tile_size", SN_FIELD(c.model.tile_size, parse_number<int>(k, v))},
        {"model.tile_rows", SN_FIELD(c.model.tile_rows, parse_number<int>(k, v))},
        {"model.tile_cols", SN_FIELD(c.model.tile_cols, parse_number<int>(k, v))},

        {"train.learning_rate", SN_FIELD(c.train.learning_rate, parse_number<double>(k, v))},
        {"train.weight_decay", SN_FIELD(c.train.weight_decay, parse_number<double>(k, v))},
        {"train.momentum", SN_FIELD(c.train.momentum, parse_number<double>(k, v))},
        {"train.grad_clip_norm", SN_FIELD(c.train.grad_clip_norm, parse_number<double>(k, v))},
        {"train.micro_batch", SN_FIELD(c.train.micro_batch, parse_number<int>(k, v))},
        {"train.effective_batch", SN_FIELD(c.train.effective_batch, parse_number<int>(k, v))},
        {"train.epochs", SN_FIELD(c.train.epochs, parse_number<int>(k, v))},
        {"train.seed", SN_FIELD(c.train.seed, parse_number<std::uint64_t>(k, v))},
        {"train.tile_positive_weight", SN_FIELD(c.train.loss.tile_positive, parse_number<double>(k, v))},
        {"train.image_positive_weight", SN_FIELD(c.train.loss.image_positive, parse_number<double>(k, v))},
        {"train.normalize_tile_loss", SN_FIELD(c.train.loss.normalize_tiles, parse_bool(k, v))},
        {"train.threads", SN_FIELD(c.train.threads, parse_number<int>(k, v))},

        {"eval.split", SN_TEXT(c.eval.split)},
        {"eval.latency_warmup", SN_FIELD(c.eval.latency_warmup, parse_number<int>(k, v))},
        {"eval.latency_trials", SN_FIELD(c.eval.latency_trials, parse_number<int>(k, v))},
        {"eval.eval_chunk", SN_FIELD(c.eval.eval_chunk, parse_number<int>(k, v))},
    };
    return table;
}

#undef SN_FIELD
#undef SN_TEXT
#undef SN_ENUM

}  // namespace

PreprocessGeometry DataConfig::resolved_geometry() const {
    PreprocessGeometry g;
    if (geometry == "full") {
        g = PreprocessGeometry::full();
    } else if (geometry == "desk") {
        g = PreprocessGeometry::desk();
    } else {
        throw ConfigError("data.geometry must be 'full' or 'desk' (got '" + geometry + "')");
    }
    if (resize_percent <= 0 || resize_percent > 100) throw ConfigError("data.resize_percent must lie in (0, 100]");
    if (resize_percent != 100) {
        const double s = resize_percent / 100.0;
        const auto scaled = [s](int v) { return static_cast<int>(std::lround(v * s)); };
        g.tiles.tile_size = scaled(g.tiles.tile_size);
        g.tiles.overlap = scaled(g.tiles.overlap);
        g.crop_top = scaled(g.crop_top);
        g.resize_width = g.tiles.width();
        g.resize_height = g.tiles.height() + g.crop_top;
        g.tile_threshold = static_cast<int>(std::lround(g.tile_threshold * s * s));
    }
    if (tile_threshold >= 0) g.tile_threshold = tile_threshold;
    g.validate();
    return g;
}

void TrainConfig::validate() const {
    if (micro_batch < 1) throw ConfigError("train.micro_batch must be >= 1");
    if (effective_batch < micro_batch || effective_batch % micro_batch != 0) {
        throw ConfigError("train.effective_batch (" + std::to_string(effective_batch) +
                          ") must be a positive multiple of train.micro_batch (" + std::to_string(micro_batch) + ")");
    }
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (learning_rate < 0.0 || weight_decay < 0.0 || momentum < 0.0 || grad_clip_norm < 0.0) {
        throw ConfigError("train.learning_rate, weight_decay, momentum and grad_clip_norm must be non-negative");
    }
    loss.validate();
}

void RunConfig::sync_model_geometry() {
    const auto g = data.resolved_geometry();
    model.tile_size = g.tiles.tile_size;
    model.tile_rows = g.tiles.rows;
    model.tile_cols = g.tiles.cols;
}

void RunConfig::validate() const {
    data.resolved_geometry();
    if (data.background != "diff" && data.background != "mog2") {
        throw ConfigError("data.background must be 'diff' or 'mog2' (got '" + data.background + "')");
    }
    model.validate();
    train.validate();
    if (eval.split != "train" && eval.split != "val" && eval.split != "test") {
        throw ConfigError("eval.split must be train, val or test (got '" + eval.split + "')");
    }
    if (eval.latency_trials < 1 || eval.latency_warmup < 0) throw ConfigError("eval latency counts out of range");
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
    const auto& table = fields();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(config, key, value);
}

RunConfig parse_config(const std::string& text, RunConfig base, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            apply_setting(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), std::move(base), path.string());
}

std::string to_config_text(const RunConfig& config) {
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, field] : fields()) keys.push_back(key);
    return keys;
}

std::string variant_to_text(const VariantConfig& variant) {
    RunConfig c;
    c.model = variant;
    std::string out;
    for (const auto& [key, field] : fields()) {
        if (key.rfind("model.", 0) == 0) out += key + " = " + field.get(c) + "\n";
    }
    return out;
}

VariantConfig variant_from_text(const std::string& text) {
    const RunConfig c = parse_config(text, RunConfig{}, "<variant>");
    return c.model;
}

namespace sweep {

std::map<std::string, std::vector<std::string>> grids() {
    const auto as_text = [](const auto& values) {
        std::vector<std::string> out;
        for (const auto& v : values) out.push_back(fmt(v));
        return out;
    };
    return {
        {"train.learning_rate", as_text(kLearningRates)},
        {"train.weight_decay", as_text(kWeightDecays)},
        {"data.resize_percent", as_text(kResizePercents)},
        {"data.tile_threshold", as_text(kTileThresholds)},
        {"model.dropout", as_text(kDropouts)},
        {"train.image_positive_weight", as_text(kImagePositiveWeights)},
    };
}

}  // namespace sweep

}  // namespace smokeynet
