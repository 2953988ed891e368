#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "facade3d/errors.hpp"
#include "facade3d/geometry.hpp"

namespace facade3d {

using Json = nlohmann::json;

Json load_json_file(const std::filesystem::path& path);
void write_json_file(const Json& j, const std::filesystem::path& path);

/// Fetches j[key], throwing ParseError with a field path on absence.
const Json& require_field(const Json& j, const char* key,
                          const std::string& context);

// Geometry <-> JSON. Vectors serialize as arrays, planes/bases as objects.
void to_json(Json& j, const Vec3& v);
void from_json(const Json& j, Vec3& v);
void to_json(Json& j, const Vec2& v);
void from_json(const Json& j, Vec2& v);
void to_json(Json& j, const UnitVec3& v);
void from_json(const Json& j, UnitVec3& v);
void to_json(Json& j, const Plane& p);
void from_json(const Json& j, Plane& p);
void to_json(Json& j, const Mat3& m);
void from_json(const Json& j, Mat3& m);
void to_json(Json& j, const PlaneBasis& b);
void from_json(const Json& j, PlaneBasis& b);
void to_json(Json& j, const Box2& b);
void from_json(const Json& j, Box2& b);

}  // namespace facade3d
