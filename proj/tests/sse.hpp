// Tiny server-sent-events reader for tests.
#pragma once

#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace sse {

struct Frame {
    std::uint64_t id = 0;
    std::string event;
    nlohmann::json data;
};

/// Reads /events until `want` frames arrived or `pred` says stop.
template <typename Stop>
std::vector<Frame> read(int port, std::size_t want, Stop stop) {
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(10, 0);
    std::vector<Frame> frames;
    std::string buf;
    cli.Get("/events", [&](const char* data, std::size_t len) {
        buf.append(data, len);
        std::size_t end;
        while ((end = buf.find("\n\n")) != std::string::npos) {
            const std::string block = buf.substr(0, end);
            buf.erase(0, end + 2);
            if (block.empty() || block[0] == ':') continue;
            Frame f;
            std::size_t pos = 0;
            while (pos < block.size()) {
                auto nl = block.find('\n', pos);
                if (nl == std::string::npos) nl = block.size();
                const std::string line = block.substr(pos, nl - pos);
                if (line.rfind("id: ", 0) == 0) f.id = std::stoull(line.substr(4));
                if (line.rfind("event: ", 0) == 0) f.event = line.substr(7);
                if (line.rfind("data: ", 0) == 0) f.data = nlohmann::json::parse(line.substr(6));
                pos = nl + 1;
            }
            frames.push_back(std::move(f));
            if (frames.size() >= want || stop(frames.back())) return false;
        }
        return true;
    });
    return frames;
}

}  // namespace sse
