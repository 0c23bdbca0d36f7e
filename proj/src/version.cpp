#include "gelab/version.hpp"

#include "gelab/build_info.hpp"

namespace gelab {

std::string version_stamp() {
    return std::string(GELAB_VERSION) + "+" + GELAB_GIT_REV + "." + GELAB_BUILD_STAMP;
}

}  // namespace gelab
