#include "smokeynet/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/rng.hpp"
#include "smokeynet/data/annotations.hpp"
#include "smokeynet/data/frame_name.hpp"
#include "smokeynet/data/manifest.hpp"
#include "smokeynet/preprocess/mask_io.hpp"
#include "smokeynet/preprocess/resize_crop.hpp"

namespace smokeynet {

SyntheticSpec SyntheticSpec::desk(int num_fires, int frames_per_fire, std::uint64_t seed) {
    SyntheticSpec s;
    s.num_fires = num_fires;
    s.frames_per_fire = frames_per_fire;
    s.seed = seed;
    s.geometry = PreprocessGeometry::desk();
    s.height = s.geometry.resize_height;
    s.width = s.geometry.resize_width;
    return s;
}

void SyntheticSpec::validate() const {
    if (num_fires < 0 || frames_per_fire < 1 || spacing_seconds < 1) throw ConfigError("synthetic: bad counts");
    if (height < 32 || width < 32) throw ConfigError("synthetic: image too small");
    if (box_only_fraction < 0 || unannotated_fraction < 0 || box_only_fraction + unannotated_fraction > 1) {
        throw ConfigError("synthetic: annotation fractions must be in [0, 1] and sum to at most 1");
    }
    if (!split_counts.empty()) {
        int total = 0;
        for (int c : split_counts) {
            if (c < 0) throw ConfigError("synthetic: negative split count");
            total += c;
        }
        if (split_counts.size() > 4 || total != num_fires) {
            throw ConfigError("synthetic: split counts must cover every fire exactly");
        }
    }
    geometry.validate();
}

int SyntheticSpec::offset_of(int frame_index) const { return (frame_index - frames_per_fire / 2) * spacing_seconds; }

std::size_t SyntheticCorpus::frame_count() const {
    std::size_t n = 0;
    for (const auto& f : fires) n += f.frames.size();
    return n;
}

// ---------------------------------------------------------------- oracle

namespace {

bool on_segment(double px, double py, const Point& a, const Point& b) {
    const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    if (cross != 0.0) return false;
    return px >= std::min(a.x, b.x) && px <= std::max(a.x, b.x) && py >= std::min(a.y, b.y) &&
           py <= std::max(a.y, b.y);
}

Polygon snapped(const Polygon& polygon) {
    Polygon out;
    for (const auto& p : polygon) out.push_back({std::round(p.x), std::round(p.y)});
    return out;
}

}  // namespace

bool point_in_polygon_closed(const Polygon& polygon, double x, double y) {
    const std::size_t n = polygon.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = polygon[i];
        const Point& b = polygon[j];
        if (on_segment(x, y, a, b)) return true;
        if ((a.y > y) != (b.y > y)) {
            const double xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (x < xc) inside = !inside;
        }
    }
    return inside;
}

cv::Mat brute_force_mask(const std::vector<Polygon>& polygons, int height, int width) {
    cv::Mat mask = cv::Mat::zeros(height, width, CV_8UC1);
    for (const auto& raw : polygons) {
        const Polygon poly = snapped(raw);
        if (poly.size() < 3) continue;
        double x0 = poly[0].x, x1 = poly[0].x, y0 = poly[0].y, y1 = poly[0].y;
        for (const auto& p : poly) {
            x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
        }
        for (int y = std::max(0, static_cast<int>(y0)); y <= std::min(height - 1, static_cast<int>(y1)); ++y) {
            for (int x = std::max(0, static_cast<int>(x0)); x <= std::min(width - 1, static_cast<int>(x1)); ++x) {
                if (point_in_polygon_closed(poly, x, y)) mask.at<std::uint8_t>(y, x) = 1;
            }
        }
    }
    return mask;
}

// ---------------------------------------------------------------- rendering

namespace {

struct FireScene {
    std::string fire_id;
    std::string station;
    std::string camera;
    cv::Mat background;  // CV_32FC3, RGB in [0, 1]
    int horizon = 0;
    Point base;
    /// Plume outline at unit scale relative to the base point.
    std::vector<Point> shape;
    double start_scale = 0.0;
    double growth_per_minute = 0.0;
    double max_scale = 0.0;
    double alpha = 0.5;
    cv::Vec3f smoke_color;
    struct Cloud {
        double x, y, rx, ry, speed, alpha;
    };
    std::vector<Cloud> clouds;
};

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

FireScene make_scene(const SyntheticSpec& spec, int index, std::mt19937_64& rng) {
    FireScene s;
    const int station = index % 3;
    std::ostringstream id;
    id << "synth" << std::setw(3) << std::setfill('0') << index << "_FIRE_st" << station << "-cam" << index;
    s.fire_id = id.str();
    s.station = "st" + std::to_string(station);
    s.camera = "st" + std::to_string(station) + "-cam" + std::to_string(index);

    const int h = spec.height, w = spec.width;
    s.horizon = static_cast<int>(h * uniform(rng, 0.32, 0.42));

    // Sky gradient over a blurred noise terrain.
    s.background = cv::Mat(h, w, CV_32FC3);
    const cv::Vec3f sky_top(uniform(rng, 0.45, 0.6), uniform(rng, 0.6, 0.7), uniform(rng, 0.8, 0.92));
    const cv::Vec3f sky_low(0.8f, 0.82f, 0.86f);
    const cv::Vec3f ground(uniform(rng, 0.3, 0.42), uniform(rng, 0.3, 0.4), uniform(rng, 0.2, 0.28));
    cv::Mat noise(h, w, CV_32FC1);
    cv::RNG cv_rng(static_cast<std::uint64_t>(rng()));
    cv_rng.fill(noise, cv::RNG::NORMAL, 0.0, 1.0);
    const int k = std::max(3, (w / 64) | 1);
    cv::GaussianBlur(noise, noise, cv::Size(k, k), 0.0);
    cv::normalize(noise, noise, -0.12, 0.12, cv::NORM_MINMAX);
    for (int y = 0; y < h; ++y) {
        const float t = std::min(1.0f, static_cast<float>(y) / std::max(1, s.horizon));
        for (int x = 0; x < w; ++x) {
            cv::Vec3f c;
            if (y < s.horizon) {
                c = sky_top * (1.0f - t) + sky_low * t;
            } else {
                const float n = noise.at<float>(y, x);
                c = ground + cv::Vec3f(n, n, n * 0.8f);
            }
            s.background.at<cv::Vec3f>(y, x) = c;
        }
    }

    s.base = {std::round(uniform(rng, 0.2, 0.8) * w), std::round(uniform(rng, 0.55, 0.8) * h)};
    // Teardrop rising from the base: radial profile over angles pi..2pi
    // (upwards in image coordinates), sheared downwind.
    const int vertices = 18;
    const double lean = uniform(rng, -0.6, 0.6);
    const double aspect = uniform(rng, 1.3, 1.9);
    s.shape.push_back({0.0, 0.0});
    for (int i = 0; i < vertices; ++i) {
        const double phi = std::numbers::pi * (1.0 + (i + 0.5) / vertices);
        const double r = (0.55 + 0.45 * std::sin(std::numbers::pi * (i + 0.5) / vertices)) * uniform(rng, 0.85, 1.0);
        const double dx = r * std::cos(phi) * 0.6;
        const double dy = r * std::sin(phi) * aspect;
        s.shape.push_back({dx - lean * dy, dy});
    }
    s.start_scale = 0.05 * h;
    s.growth_per_minute = uniform(rng, 0.006, 0.01) * h;
    s.max_scale = 0.35 * h;
    s.alpha = uniform(rng, 0.45, 0.65);
    const float grey = static_cast<float>(uniform(rng, 0.82, 0.92));
    s.smoke_color = cv::Vec3f(grey, grey, grey + 0.03f);

    for (int i = 0; i < spec.distractors; ++i) {
        s.clouds.push_back({uniform(rng, 0, w), uniform(rng, 0.05, 0.9) * s.horizon, uniform(rng, 0.04, 0.1) * w,
                            uniform(rng, 0.02, 0.05) * h, uniform(rng, -0.004, 0.004) * w,
                            uniform(rng, 0.25, 0.5)});
    }
    return s;
}

Polygon plume_polygon(const FireScene& s, int offset_seconds, int height, int width) {
    const double minutes = offset_seconds / 60.0;
    const double scale = std::min(s.max_scale, s.start_scale + s.growth_per_minute * minutes);
    Polygon poly;
    for (const auto& v : s.shape) {
        const double x = std::clamp(std::round(s.base.x + scale * v.x), 0.0, width - 1.0);
        const double y = std::clamp(std::round(s.base.y + scale * v.y), 0.0, height - 1.0);
        if (poly.empty() || !(poly.back() == Point{x, y})) poly.push_back({x, y});
    }
    return poly;
}

cv::Mat render_frame(const FireScene& s, int frame_index, const cv::Mat& smoke_mask, std::mt19937_64& rng) {
    cv::Mat img = s.background.clone();
    const int h = img.rows, w = img.cols;
    // Clouds drift across the sky.
    for (const auto& c : s.clouds) {
        double cx = std::fmod(c.x + c.speed * frame_index, static_cast<double>(w));
        if (cx < 0) cx += w;
        const int y0 = std::max(0, static_cast<int>(c.y - c.ry)), y1 = std::min(h - 1, static_cast<int>(c.y + c.ry));
        const int x0 = std::max(0, static_cast<int>(cx - c.rx)), x1 = std::min(w - 1, static_cast<int>(cx + c.rx));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d = std::pow((x - cx) / c.rx, 2) + std::pow((y - c.y) / c.ry, 2);
                if (d >= 1.0) continue;
                const float a = static_cast<float>(c.alpha * (1.0 - d));
                auto& px = img.at<cv::Vec3f>(y, x);
                px = px * (1.0f - a) + cv::Vec3f(0.97f, 0.97f, 0.97f) * a;
            }
        }
    }
    if (!smoke_mask.empty()) {
        const float a = static_cast<float>(s.alpha);
        for (int y = 0; y < h; ++y) {
            const auto* m = smoke_mask.ptr<std::uint8_t>(y);
            auto* px = img.ptr<cv::Vec3f>(y);
            for (int x = 0; x < w; ++x) {
                if (m[x]) px[x] = px[x] * (1.0f - a) + s.smoke_color * a;
            }
        }
    }
    cv::Mat noise(h, w, CV_32FC3);
    cv::RNG cv_rng(static_cast<std::uint64_t>(rng()));
    cv_rng.fill(noise, cv::RNG::NORMAL, 0.0, 0.01);
    img += noise;
    cv::min(img, cv::Scalar::all(1.0), img);
    cv::max(img, cv::Scalar::all(0.0), img);
    return img;
}

void write_png(const std::filesystem::path& path, const cv::Mat& rgb) {
    cv::Mat bgr, bytes;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    bgr.convertTo(bytes, CV_8UC3, 255.0);
    if (!cv::imwrite(path.string(), bytes, {cv::IMWRITE_PNG_COMPRESSION, 1})) {
        throw IngestError("cannot write " + path.string());
    }
}

/// Tile labels for the snapped, transformed polygons by direct per-tile
/// pixel counts (no summed-area table).
TileLabelVector truth_tile_labels(const std::vector<Polygon>& raw_polygons, const SyntheticSpec& spec) {
    const auto& g = spec.geometry;
    std::vector<Polygon> transformed;
    for (const auto& poly : raw_polygons) {
        Polygon t;
        for (const auto& p : poly) t.push_back(transform_point(p, spec.height, spec.width, g));
        transformed.push_back(std::move(t));
    }
    const cv::Mat mask = brute_force_mask(transformed, g.output_height(), g.output_width());
    TileLabelVector labels;
    const int stride = g.tiles.stride();
    for (int r = 0; r < g.tiles.rows; ++r) {
        for (int c = 0; c < g.tiles.cols; ++c) {
            int count = 0;
            for (int y = r * stride; y < r * stride + g.tiles.tile_size; ++y) {
                for (int x = c * stride; x < c * stride + g.tiles.tile_size; ++x) count += mask.at<std::uint8_t>(y, x);
            }
            labels.push_back(count > g.tile_threshold ? 1 : 0);
        }
    }
    return labels;
}

std::vector<int> default_split(int fires) {
    if (fires == 0) return {0, 0, 0};
    if (fires == 1) return {1, 0, 0};
    if (fires == 2) return {1, 0, 1};
    const int val = std::max(1, static_cast<int>(std::lround(fires * 0.2)));
    const int test = std::max(1, static_cast<int>(std::lround(fires * 0.2)));
    return {fires - val - test, val, test};
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, const std::filesystem::path& root) {
    spec.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IngestError("cannot create " + root.string() + ": " + ec.message());

    const SeedStreams streams(spec.seed);
    SyntheticCorpus corpus;
    corpus.root = root;

    std::ofstream labels_out(root / "tile_labels.txt");
    if (!labels_out) throw IngestError("cannot write " + (root / "tile_labels.txt").string());
    labels_out << "# fire_id frame_id tile_labels\n";

    for (int f = 0; f < spec.num_fires; ++f) {
        auto rng = streams.engine("synthetic.fire", static_cast<std::uint64_t>(f));
        const FireScene scene = make_scene(spec, f, rng);
        const fs::path dir = root / scene.fire_id;
        fs::create_directories(dir);

        AnnotationSidecar sidecar;
        sidecar.camera_id = scene.camera;
        sidecar.station = scene.station;
        sidecar.image_size = std::make_pair(spec.height, spec.width);

        SyntheticFireTruth truth;
        truth.fire_id = scene.fire_id;
        auto annotation_rng = streams.engine("synthetic.annotation", static_cast<std::uint64_t>(f));
        auto noise_rng = streams.engine("synthetic.noise", static_cast<std::uint64_t>(f));
        for (int i = 0; i < spec.frames_per_fire; ++i) {
            SyntheticFrameTruth frame;
            frame.offset_seconds = spec.offset_of(i);
            frame.label = label_from_offset(frame.offset_seconds);
            const std::string name = format_frame_name(scene.fire_id, frame.offset_seconds);
            frame.frame_id = fs::path(name).stem().string();

            std::vector<Polygon> polygons;
            cv::Mat mask;
            if (spec.plume && is_positive(frame.label)) {
                polygons.push_back(plume_polygon(scene, frame.offset_seconds, spec.height, spec.width));
                mask = brute_force_mask(polygons, spec.height, spec.width);
                frame.mask_pixels = static_cast<std::size_t>(cv::countNonZero(mask));
            }
            write_png(dir / name, render_frame(scene, i, mask, noise_rng));

            if (is_positive(frame.label)) {
                const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(annotation_rng);
                AnnotationSet set;
                if (draw < spec.unannotated_fraction || polygons.empty()) {
                    frame.supervision = SupervisionKind::excluded;
                } else if (draw < spec.unannotated_fraction + spec.box_only_fraction) {
                    const auto& poly = polygons.front();
                    Box box{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
                    for (const auto& p : poly) {
                        box.xmin = std::min(box.xmin, p.x), box.xmax = std::max(box.xmax, p.x);
                        box.ymin = std::min(box.ymin, p.y), box.ymax = std::max(box.ymax, p.y);
                    }
                    set.boxes.push_back(box);
                    frame.supervision = SupervisionKind::box_fill;
                    frame.tile_labels = truth_tile_labels({box.as_polygon()}, spec);
                } else {
                    set.contours = polygons;
                    frame.supervision = SupervisionKind::contour;
                    frame.tile_labels = truth_tile_labels(polygons, spec);
                }
                if (!set.empty()) sidecar.frames[frame.frame_id] = set;
            } else {
                frame.supervision = SupervisionKind::contour;
                frame.tile_labels.assign(static_cast<std::size_t>(spec.geometry.tiles.count()), 0);
            }
            labels_out << scene.fire_id << ' ' << frame.frame_id << ' '
                       << (frame.tile_labels.empty() ? std::string("-") : format_tile_labels(frame.tile_labels))
                       << '\n';
            truth.frames.push_back(std::move(frame));
        }
        write_annotation_sidecar(dir / kAnnotationFileName, sidecar);
        corpus.fires.push_back(std::move(truth));
    }

    const std::vector<int> counts = spec.split_counts.empty() ? default_split(spec.num_fires) : spec.split_counts;
    std::size_t next = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
        for (int n = 0; n < counts[s]; ++n) {
            fires_of(corpus.manifest, kAllSplits[s]).insert(corpus.fires[next++].fire_id);
        }
    }
    write_split_manifest(root / "manifest.txt", corpus.manifest);
    return corpus;
}

std::map<std::pair<std::string, std::string>, TileLabelVector> read_truth_tile_labels(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read " + path.string());
    std::map<std::pair<std::string, std::string>, TileLabelVector> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string fire, frame, bits;
        if (!(fields >> fire >> frame >> bits)) throw ParseError("bad tile-label line: " + line);
        out[{fire, frame}] = bits == "-" ? TileLabelVector{} : parse_tile_labels(bits);
    }
    return out;
}

}  // namespace smokeynet
