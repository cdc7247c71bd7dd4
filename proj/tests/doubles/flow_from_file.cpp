// Flow-estimator test double: drains the PNG arriving on stdin, then emits
// the flow file named on the command line. Stands in for a real estimator
// behind the --flow-cmd seam.
#include <cstdio>
#include <vector>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: flow_from_file <flow-file>\n");
        return 2;
    }

    char sink[65536];
    while (std::fread(sink, 1, sizeof sink, stdin) == sizeof sink) {}
    if (!std::feof(stdin) && std::ferror(stdin)) return 1;

    std::FILE* in = std::fopen(argv[1], "rb");
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", argv[1]);
        return 1;
    }
    std::vector<char> buf(65536);
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), in)) > 0) {
        if (std::fwrite(buf.data(), 1, n, stdout) != n) {
            std::fclose(in);
            return 1;
        }
    }
    std::fclose(in);
    return 0;
}
