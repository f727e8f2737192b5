#pragma once

#include <cstdint>
#include <string>

#include "core/image.hpp"

namespace cycleuq {

enum class SceneClass { SmoothField, Shapes, CheckerText };

inline constexpr SceneClass kAllSceneClasses[] = {SceneClass::SmoothField, SceneClass::Shapes,
                                                  SceneClass::CheckerText};

std::string to_string(SceneClass c);
SceneClass parse_scene_class(const std::string& text);

struct SceneSpec {
  SceneClass class_id = SceneClass::SmoothField;
  std::size_t size = 64;
  std::uint64_t seed = 0;
};

// Deterministic per spec, values in [0,1]. Size must be a power of two >= 32.
//   smooth_field: seeded noise low-passed to radial frequency size/8
//   shapes:       anti-aliased rectangles and disks over a linear gradient
//   checker_text: checkerboard (period 8..16 px) with glyph-like strokes
Image generate_scene(const SceneSpec& spec);

}  // namespace cycleuq
