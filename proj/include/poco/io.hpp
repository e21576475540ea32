#ifndef POCO_IO_HPP
#define POCO_IO_HPP

#include <map>
#include <string>

#include "poco/geometry.hpp"
#include "poco/mesh.hpp"
#include "poco/model.hpp"

namespace poco {

/// ASCII XYZ: one point per line, "x y z" or "x y z nx ny nz", '#' comments.
PointCloud read_xyz(const std::string& path);
void write_xyz(const PointCloud& cloud, const std::string& path);

/// OBJ subset: "v x y z" and triangle-only "f i j k" (1-indexed).
Mesh read_obj(const std::string& path);
void write_obj(const Mesh& mesh, const std::string& path);

/// Binary model container.
///
/// Layout, all integers little-endian:
///   bytes 0-3   magic "POCO"
///   u32         version (1)
///   u32 x 6     n, k, h, L, k_enc, hidden
///   u8          use_normals
///   then every parameter matrix in ParamStore order (encoder layers in depth
///   order: msg_w, msg_b, res_w; enc_out w, b; R layers 1-3: w, b; attention
///   w; decoder w; decoder b), each as u32 rows, u32 cols, then row-major
///   IEEE-754 32-bit values.
void save_model(const PocoModel& model, const std::string& path);
PocoModel load_model(const std::string& path);

/// Flat key=value config lines, '#' comments. Unknown keys are rejected
/// against the allowed key set.
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace poco

#endif
