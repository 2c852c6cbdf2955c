#pragma once

#include <functional>
#include <string_view>

namespace ergokit {

enum class LogLevel { Debug, Info, Warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Installs the process-wide diagnostic sink. Passing an empty function
/// silences the library (the default).
void set_log_sink(LogSink sink);

void log_message(LogLevel level, std::string_view message);

}  // namespace ergokit
