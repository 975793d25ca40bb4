#include "cmdforge/cassette.h"

#include <fstream>

#include <nlohmann/json.hpp>

#include "cmdforge/digest.h"
#include "cmdforge/errors.h"

namespace cmdforge {

std::string request_digest(const ChatRequest& request, std::string_view model, double temperature) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  nlohmann::json canonical{{"agent", request.agent_id},
                           {"model", model},
                           {"temperature", temperature},
                           {"messages", msgs}};
  return sha256_hex(canonical.dump());
}

std::shared_ptr<Cassette> Cassette::open(const std::filesystem::path& path) {
  auto cassette = std::make_shared<Cassette>();
  cassette->path_ = path;
  std::ifstream in(path);
  if (!in) return cassette;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      cassette->entries_.insert_or_assign(j.at("request_digest").get<std::string>(),
                                          j.at("response_text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw SpecError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed cassette line: " + e.what());
    }
  }
  return cassette;
}

std::optional<std::string> Cassette::find(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void Cassette::record(const std::string& digest, const std::string& response_text) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(digest, response_text);
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to cassette " + path_.string());
  out << nlohmann::json{{"request_digest", digest}, {"response_text", response_text}}.dump()
      << '\n';
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<Cassette> cassette, std::string model,
                             double temperature)
    : cassette_(std::move(cassette)), model_(std::move(model)), temperature_(temperature) {}

ChatReply ReplayBackend::complete(const ChatRequest& request) {
  auto digest = request_digest(request, model_, temperature_);
  auto text = cassette_->find(digest);
  if (!text) {
    throw TransportError("cassette miss for agent " + request.agent_id + " (digest " + digest + ")");
  }
  return {*text, 0, 0};
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner,
                                   std::shared_ptr<Cassette> cassette, std::string model,
                                   double temperature)
    : inner_(std::move(inner)),
      cassette_(std::move(cassette)),
      model_(std::move(model)),
      temperature_(temperature) {}

ChatReply RecordingBackend::complete(const ChatRequest& request) {
  ChatReply reply = inner_->complete(request);
  cassette_->record(request_digest(request, model_, temperature_), reply.text);
  return reply;
}

}  // namespace cmdforge
