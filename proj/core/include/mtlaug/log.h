// core/include/mtlaug/log.h

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Line-delimited JSON logging. One object per line:
//   {"ts":..., "level":"info", "event":"...", ...fields}

#ifndef MTLAUG_LOG_H_
#define MTLAUG_LOG_H_

#include <ostream>
#include <string>

#include "json.hpp"

namespace mtlaug {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();
/// Defaults to std::cerr. The stream must outlive all logging.
void SetLogStream(std::ostream *os);

void Log(LogLevel level, const std::string &event, nlohmann::json fields = nlohmann::json::object());
inline void LogInfo(const std::string &event, nlohmann::json f = nlohmann::json::object()) {
  Log(LogLevel::kInfo, event, std::move(f));
}
inline void LogWarn(const std::string &event, nlohmann::json f = nlohmann::json::object()) {
  Log(LogLevel::kWarn, event, std::move(f));
}
inline void LogDebug(const std::string &event, nlohmann::json f = nlohmann::json::object()) {
  Log(LogLevel::kDebug, event, std::move(f));
}

}  // namespace mtlaug

#endif  // MTLAUG_LOG_H_
