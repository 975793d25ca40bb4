#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "cmdforge/agent_runtime.h"

namespace cmdforge {

// Digest of what the endpoint would see, plus the requesting agent so that
// identical first-round prompts sent to different agents stay distinct.
std::string request_digest(const ChatRequest& request, std::string_view model, double temperature);

// Record/replay store: JSON lines of {"request_digest", "response_text"}.
class Cassette {
 public:
  Cassette() = default;
  // Missing file yields an empty cassette bound to that path.
  static std::shared_ptr<Cassette> open(const std::filesystem::path& path);

  std::optional<std::string> find(const std::string& digest) const;
  // Appends to memory and to the bound file, if any.
  void record(const std::string& digest, const std::string& response_text);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
};

class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::shared_ptr<Cassette> cassette, std::string model, double temperature);
  // Throws TransportError on a cassette miss.
  ChatReply complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<Cassette> cassette_;
  std::string model_;
  double temperature_;
};

class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<Cassette> cassette,
                   std::string model, double temperature);
  ChatReply complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<Cassette> cassette_;
  std::string model_;
  double temperature_;
};

}  // namespace cmdforge
