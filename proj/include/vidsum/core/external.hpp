#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "vidsum/core/error.hpp"
#include "vidsum/core/io.hpp"

namespace vidsum {

// Adapter for model backends that live outside this process. The command gets
// one JSON request on stdin and must print one JSON object on stdout. Credentials
// reach the command through the inherited environment.
class ExternalCommand {
 public:
  explicit ExternalCommand(std::string command) : command_(std::move(command)) {
    require(!command_.empty(), "external backend command must not be empty");
  }

  const std::string& command() const noexcept { return command_; }

  nlohmann::json call(const nlohmann::json& request) const {
    const auto dir = scratch_dir();
    const auto stem = "req-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++);
    const auto in_path = dir / (stem + ".json");
    const auto out_path = dir / (stem + ".out");
    write_file(in_path, request.dump());
    const std::string shell = command_ + " < '" + in_path.string() + "' > '" + out_path.string() + "'";
    const int status = std::system(shell.c_str());
    std::string response;
    try {
      response = read_file(out_path);
    } catch (const PersistenceError&) {
    }
    std::error_code ec;
    std::filesystem::remove(in_path, ec);
    std::filesystem::remove(out_path, ec);
    if (status != 0) {
      throw BackendError("external command '" + command_ + "' exited with status " + std::to_string(status));
    }
    auto parsed = nlohmann::json::parse(response, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw BackendError("external command '" + command_ + "' returned invalid JSON");
    }
    if (parsed.contains("error")) {
      throw BackendError("external command '" + command_ + "': " + parsed["error"].dump());
    }
    return parsed;
  }

  static std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "vidsum-external";
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    return dir;
  }

 private:
  static std::atomic<unsigned long>& counter() {
    static std::atomic<unsigned long> value{0};
    return value;
  }

  std::string command_;
};

}  // namespace vidsum
