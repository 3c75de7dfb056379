#include "srlite/profile.hpp"

namespace srlite::profile {

namespace {
std::uint64_t* g_counter = nullptr;
}

void set_multiadd_counter(std::uint64_t* counter) { g_counter = counter; }

std::uint64_t* multiadd_counter() { return g_counter; }

}  // namespace srlite::profile
