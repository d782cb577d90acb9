#include "smokeynet/harness/mirror.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>
#include <zlib.h>

#include "smokeynet/common/error.hpp"
#include "smokeynet/common/log.hpp"

namespace smokeynet {

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

Url split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("mirror URL needs a scheme: " + url);
    const auto path = url.find('/', scheme + 3);
    Url out;
    out.origin = url.substr(0, path);
    out.prefix = path == std::string::npos ? "" : url.substr(path);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

bool safe_relative(const std::string& rel) {
    const std::filesystem::path p(rel);
    if (p.is_absolute() || rel.empty()) return false;
    for (const auto& part : p) {
        if (part == "..") return false;
    }
    return true;
}

}  // namespace

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = in.gcount();
        if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::string> parse_listing(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(b, e - b + 1));
    }
    return out;
}

MirrorResult mirror_files(const MirrorOptions& options) {
    namespace fs = std::filesystem;
    const Url url = split_url(options.base_url);
    httplib::Client client(url.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);

    fs::create_directories(options.destination);
    std::ofstream log_file(options.destination / "checksums.log", std::ios::app);
    MirrorResult result;

    for (const auto& rel : options.files) {
        if (!safe_relative(rel)) throw ConfigError("refusing unsafe mirror path '" + rel + "'");
        const fs::path target = options.destination / rel;
        if (fs::exists(target)) {
            ++result.skipped;
            continue;
        }
        fs::create_directories(target.parent_path());
        const fs::path part = target.string() + ".part";
        bool done = false;
        std::string last_error;
        for (int attempt = 0; attempt <= options.retries && !done; ++attempt) {
            const std::uintmax_t have = fs::exists(part) ? fs::file_size(part) : 0;
            httplib::Headers headers;
            if (have > 0) headers.emplace("Range", "bytes=" + std::to_string(have) + "-");

            std::ofstream out;
            int status = 0;
            auto res = client.Get(
                url.prefix + "/" + rel, headers,
                [&](const httplib::Response& response) {
                    status = response.status;
                    if (status == 206 && have > 0) {
                        out.open(part, std::ios::binary | std::ios::app);
                    } else if (status == 200) {
                        out.open(part, std::ios::binary | std::ios::trunc);
                    } else {
                        return false;
                    }
                    return static_cast<bool>(out);
                },
                [&](const char* data, size_t length) {
                    out.write(data, static_cast<std::streamsize>(length));
                    result.bytes += length;
                    return static_cast<bool>(out);
                });
            out.close();
            if (res && (status == 200 || status == 206)) {
                if (status == 206) ++result.resumed;
                done = true;
            } else if (res && status == 416) {
                // Range past the end: the part file is already complete.
                done = true;
            } else {
                // A refused status cancels the body read, so report the status itself.
                last_error = status != 0 ? "HTTP " + std::to_string(status) : httplib::to_string(res.error());
                log::warn("mirror: ", rel, " attempt ", attempt + 1, " failed: ", last_error);
            }
        }
        if (!done) throw IngestError("mirror: cannot fetch " + rel + ": " + last_error);
        fs::rename(part, target);
        ++result.downloaded;
        std::ostringstream line;
        line << std::hex << std::setw(8) << std::setfill('0') << file_crc32(target) << std::dec << ' '
             << fs::file_size(target) << ' ' << rel << '\n';
        log_file << line.str();
        log_file.flush();
    }
    return result;
}

}  // namespace smokeynet
