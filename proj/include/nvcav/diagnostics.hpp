#pragma once

#include <functional>
#include <string_view>

namespace nvcav
{

// Non-fatal conditions (violated approximation preconditions, clamped
// values) are reported through a process-wide handler. The default handler
// prints to stderr.
using WarningHandler = std::function<void(std::string_view)>;

// Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

// Installs a handler for the lifetime of the object and restores the previous
// one on destruction.
class ScopedWarningHandler
{
public:
    explicit ScopedWarningHandler(WarningHandler handler);
    ~ScopedWarningHandler();
    ScopedWarningHandler(const ScopedWarningHandler &) = delete;
    ScopedWarningHandler &operator=(const ScopedWarningHandler &) = delete;

private:
    WarningHandler previous_;
};

} // namespace nvcav
