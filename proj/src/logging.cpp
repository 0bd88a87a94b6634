#include "residcorr/logging.hpp"

#include <iostream>
#include <mutex>

namespace residcorr {

namespace {

std::mutex g_mutex;
WarningHandler g_handler = [](const std::string& message) {
  std::cerr << "warning: " << message << '\n';
};

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_mutex);
  std::swap(handler, g_handler);
  return handler;
}

void warn(const std::string& message) {
  std::lock_guard lock(g_mutex);
  if (g_handler) g_handler(message);
}

}  // namespace residcorr
