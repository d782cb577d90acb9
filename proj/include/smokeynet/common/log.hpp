#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string_view>

namespace smokeynet::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline std::atomic<Level>& threshold() {
    static std::atomic<Level> level{Level::info};
    return level;
}

inline void set_level(Level level) { threshold().store(level); }

inline std::string_view level_name(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
        default: return "off";
    }
}

template <class... Args>
void write(Level level, const Args&... args) {
    if (level < threshold().load()) {
        return;
    }
    std::ostringstream line;
    line << "[smokeynet " << level_name(level) << "] ";
    (line << ... << args);
    line << '\n';
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::clog << line.str();
}

template <class... Args>
void debug(const Args&... args) { write(Level::debug, args...); }
template <class... Args>
void info(const Args&... args) { write(Level::info, args...); }
template <class... Args>
void warn(const Args&... args) { write(Level::warn, args...); }
template <class... Args>
void error(const Args&... args) { write(Level::error, args...); }

}  // namespace smokeynet::log
