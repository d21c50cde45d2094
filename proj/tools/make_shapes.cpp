// Regenerates the bundled object outlines under data/objects/.

#include <filesystem>
#include <iostream>

#include "simto/io.hpp"
#include "simto/shapes.hpp"

using namespace simto;

int main(int argc, char** argv) {
    std::filesystem::path dir = argc > 1 ? argv[1] : "data/objects";
    std::filesystem::create_directories(dir);
    // desk-scale set (fits the 60x28 finger)
    write_polygon(dir / "curvy_ball.poly", shapes::circle_with_bumps(11.0, 1.8, 6));
    write_polygon(dir / "gear.poly", shapes::gear(9, 9.0, 12.5));
    write_polygon(dir / "hourglass.poly", shapes::hourglass(22.0, 26.0, 10.0));
    write_polygon(dir / "spiky_ball.poly", shapes::spiked_disc(9.5, 3.5, 8));
    write_polygon(dir / "star.poly", shapes::star(5, 13.0, 6.5));
    write_polygon(dir / "disc.poly", shapes::circle(11.0));
    std::cout << "wrote 6 shapes to " << dir << "\n";
    return 0;
}
