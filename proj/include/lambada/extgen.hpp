#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lambada/condlm.hpp"

namespace lambada {

/// Raised when the external generator process misbehaves: it exits, times
/// out, answers with malformed JSON, or reports an error status.
class GeneratorError : public Error {
 public:
  using Error::Error;
};

/// Host side of the generator wire protocol (version 1).
///
/// The adapter is a child process started through `/bin/sh -c <command>`.
/// Each request is one JSON object written to its stdin followed by '\n';
/// each response is one JSON object read from its stdout. Requests:
///
///   {"command":"handshake","protocol":1}
///   {"command":"fit","labels":{"1":"flight",...},"pairs":[{"text":"...","label":1},...]}
///   {"command":"generate","class":1,"count":3,"seed":42,"max_len":40}
///   {"command":"shutdown"}
///
/// Responses carry "status":"ok" or "status":"error" with "message". A
/// handshake answer carries "protocol":1 and optional "capabilities"; a
/// generate answer carries "sentences":[...] and optionally "truncated":[...].
class ExternalGenerator : public ConditionalGenerator {
 public:
  static constexpr int kProtocolVersion = 1;

  explicit ExternalGenerator(std::string command,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~ExternalGenerator() override;
  ExternalGenerator(const ExternalGenerator&) = delete;
  ExternalGenerator& operator=(const ExternalGenerator&) = delete;

  std::string name() const override { return "external"; }
  void fit(const Dataset& d) override;
  bool covers(ClassId label) const override;
  std::vector<GeneratedSentence> generate(ClassId label, std::size_t count, std::uint64_t class_seed,
                                          const GenerationParams& params) override;

  /// Sends one request and waits for its response line.
  nlohmann::json request(const nlohmann::json& req);
  const nlohmann::json& handshake_response() const { return handshake_; }
  void shutdown();

 private:
  void start();
  void write_line(const std::string& line);
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  nlohmann::json handshake_;
  LabelMap labels_;
  bool fitted_ = false;
};

}  // namespace lambada
