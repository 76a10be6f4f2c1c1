#ifndef CYLQG_IO_HPP
#define CYLQG_IO_HPP

#include <iosfwd>
#include <string>

#include "cylqg/field.hpp"
#include "cylqg/flowmap.hpp"

namespace cylqg {

// Shortest-exact decimal rendering (%.17g trimmed): the same build always
// reproduces byte-identical CSV output.
std::string fmt_double(double v);

// x,y,z,value rows over fluid nodes.
void write_field_csv(const ScalarField3& f, std::ostream& os);
// x,y,z,u,v rows over fluid nodes.
void write_vector_csv(const VectorField3& f, std::ostream& os);
// Legacy-ASCII structured points; exterior nodes blanked to 0.
void write_vtk(const ScalarField3& f, const std::string& name,
               std::ostream& os);
// level,seed_x,seed_y,t,x,y rows.
void write_flowmap_csv(const FlowMap& m, std::ostream& os);

} // namespace cylqg

#endif
