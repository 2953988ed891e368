#include "facade3d/json_util.hpp"

#include <fstream>

namespace facade3d {

namespace fs = std::filesystem;

Json load_json_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const Json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
}

const Json& require_field(const Json& j, const char* key,
                          const std::string& context) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(context + ": missing field '" + key + "'");
  }
  return j.at(key);
}

void to_json(Json& j, const Vec3& v) { j = Json::array({v.x, v.y, v.z}); }

void from_json(const Json& j, Vec3& v) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected [x,y,z]");
  v = Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void to_json(Json& j, const Vec2& v) { j = Json::array({v.x, v.y}); }

void from_json(const Json& j, Vec2& v) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [x,y]");
  v = Vec2(j[0].get<double>(), j[1].get<double>());
}

void to_json(Json& j, const UnitVec3& v) { to_json(j, v.vec()); }

void from_json(const Json& j, UnitVec3& v) {
  Vec3 raw;
  from_json(j, raw);
  v = UnitVec3::assume_unit(raw);
}

void to_json(Json& j, const Plane& p) {
  j = Json{{"normal", p.normal}, {"d", p.d}};
}

void from_json(const Json& j, Plane& p) {
  p.normal = j.at("normal").get<UnitVec3>();
  p.d = j.at("d").get<double>();
}

void to_json(Json& j, const Mat3& m) {
  j = Json::array();
  for (int r = 0; r < 3; ++r) {
    j.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2)}));
  }
}

void from_json(const Json& j, Mat3& m) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected 3x3 matrix");
  for (int r = 0; r < 3; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || row.size() != 3) {
      throw ParseError("expected 3x3 matrix");
    }
    for (int c = 0; c < 3; ++c) m(r, c) = row[c].get<double>();
  }
}

void to_json(Json& j, const PlaneBasis& b) {
  j = Json{{"u", b.u}, {"v", b.v}, {"n", b.n}, {"origin3d", b.origin3d}};
}

void from_json(const Json& j, PlaneBasis& b) {
  b.u = j.at("u").get<UnitVec3>();
  b.v = j.at("v").get<UnitVec3>();
  b.n = j.at("n").get<UnitVec3>();
  b.origin3d = j.at("origin3d").get<Vec3>();
}

void to_json(Json& j, const Box2& b) {
  j = Json::array({b.x0, b.y0, b.x1, b.y1});
}

void from_json(const Json& j, Box2& b) {
  if (!j.is_array() || j.size() != 4) throw ParseError("expected [x0,y0,x1,y1]");
  b = Box2{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
           j[3].get<double>()};
}

}  // namespace facade3d
