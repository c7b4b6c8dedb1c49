#pragma once

#include <map>
#include <string>
#include <vector>

namespace hce {

struct SceneObject {
    // kind -> concept; empty when ingesting unlabeled external features.
    std::map<std::string, std::string> attributes;
    std::vector<double> features;
};

struct Scene {
    std::string id;
    std::vector<SceneObject> objects;
};

}  // namespace hce
