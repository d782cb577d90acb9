#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smokeynet/common/error.hpp"
#include "smokeynet/data/types.hpp"

namespace smokeynet {

inline const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::omit: return "omit";
    }
    return "unknown";
}

inline std::set<std::string>& fires_of(SplitManifest& manifest, Split split) {
    switch (split) {
        case Split::train: return manifest.train_fires;
        case Split::val: return manifest.val_fires;
        case Split::test: return manifest.test_fires;
        default: return manifest.omitted_fires;
    }
}

inline const std::set<std::string>& fires_of(const SplitManifest& manifest, Split split) {
    return fires_of(const_cast<SplitManifest&>(manifest), split);
}

inline constexpr std::array<Split, 4> kAllSplits{Split::train, Split::val, Split::test, Split::omit};

/// Parses the sectioned manifest text: `[train]`, `[val]`, `[test]`, `[omit]`
/// headers, one fire id per line, `#` starts a comment. Does not check
/// disjointness; see validate_manifest.
inline SplitManifest parse_split_manifest(std::istream& in, const std::string& source = "<manifest>") {
    SplitManifest manifest;
    std::optional<Split> section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(first, last - first + 1);
        if (token.front() == '[') {
            if (token == "[train]") section = Split::train;
            else if (token == "[val]") section = Split::val;
            else if (token == "[test]") section = Split::test;
            else if (token == "[omit]") section = Split::omit;
            else throw ParseError(source + ":" + std::to_string(line_no) + ": unknown section " + token);
            continue;
        }
        if (!section) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": fire id '" + token +
                             "' appears before any section header");
        }
        auto& set = fires_of(manifest, *section);
        if (!set.insert(token).second) {
            throw ValidationError(source + ":" + std::to_string(line_no) + ": fire '" + token +
                                  "' listed twice in [" + to_string(*section) + "]");
        }
    }
    return manifest;
}

struct SplitCounts {
    std::size_t fires = 0;
    std::size_t images = 0;
};

struct ManifestReport {
    std::map<Split, SplitCounts> counts;
};

/// Cross-checks the manifest against an index: the four sets must be
/// pairwise disjoint, every listed fire must exist, and together they must
/// cover the index. Returns per-split fire and image counts.
inline ManifestReport validate_manifest(const SplitManifest& manifest, const std::vector<FireSequence>& index) {
    std::map<std::string, std::vector<Split>> membership;
    for (Split split : kAllSplits) {
        for (const auto& fire : fires_of(manifest, split)) membership[fire].push_back(split);
    }
    std::ostringstream problems;
    for (const auto& [fire, splits] : membership) {
        if (splits.size() > 1) {
            problems << "\n  fire '" << fire << "' appears in";
            for (Split s : splits) problems << " [" << to_string(s) << "]";
        }
    }
    std::map<std::string, std::size_t> images;
    for (const auto& fire : index) images[fire.fire_id] = fire.frames.size();
    for (const auto& [fire, splits] : membership) {
        if (images.count(fire) == 0) problems << "\n  fire '" << fire << "' is not in the archive index";
    }
    for (const auto& [fire, n] : images) {
        if (membership.count(fire) == 0) problems << "\n  archive fire '" << fire << "' is not assigned to a split";
    }
    if (const std::string text = problems.str(); !text.empty()) {
        throw ValidationError("split manifest failed validation:" + text);
    }
    ManifestReport report;
    for (Split split : kAllSplits) {
        SplitCounts counts;
        for (const auto& fire : fires_of(manifest, split)) {
            ++counts.fires;
            counts.images += images.at(fire);
        }
        report.counts[split] = counts;
    }
    return report;
}

inline SplitManifest load_split_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open split manifest " + path.string());
    }
    return parse_split_manifest(in, path.string());
}

/// Loads and validates in one step.
inline std::pair<SplitManifest, ManifestReport> load_split_manifest(const std::filesystem::path& path,
                                                                    const std::vector<FireSequence>& index) {
    SplitManifest manifest = load_split_manifest(path);
    ManifestReport report = validate_manifest(manifest, index);
    return {std::move(manifest), std::move(report)};
}

inline void write_split_manifest(std::ostream& out, const SplitManifest& manifest) {
    for (Split split : kAllSplits) {
        out << '[' << to_string(split) << "]\n";
        for (const auto& fire : fires_of(manifest, split)) out << fire << '\n';
    }
}

inline void write_split_manifest(const std::filesystem::path& path, const SplitManifest& manifest) {
    std::ofstream out(path);
    if (!out) {
        throw IngestError("cannot write split manifest " + path.string());
    }
    write_split_manifest(out, manifest);
}

}  // namespace smokeynet
