#ifndef PULSESTAB_VERSION_HPP
#define PULSESTAB_VERSION_HPP

namespace pulsestab {

inline constexpr const char* kVersion = "0.1.0";

} // namespace pulsestab

#endif
