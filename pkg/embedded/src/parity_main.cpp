/* Host-side parity harness for the emitted classifier runtime.
 *
 * The emitted model source is injected at compile time via
 *   -DSIREC_MODEL="\"/path/to/model.cpp\""
 * so the whole classifier (constant tables + allocation-free runtime)
 * compiles into this single translation unit. The harness itself runs on
 * the host and may use the standard library freely; the included runtime
 * uses math.h/stdint.h only.
 *
 * Usage: parity <dataset.csv> <out.csv>
 * Reads the versioned dataset CSV, classifies the leading
 * SIREC_SEGMENT_LENGTH samples of every row and writes
 * "row_index,predicted_label" lines. IO or schema problems exit nonzero
 * with a one-line error naming the offending line.
 */

#ifndef SIREC_MODEL
#error "compile with -DSIREC_MODEL=\"\\\"model.cpp\\\"\""
#endif
#include SIREC_MODEL

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int fail(const std::string &msg) {
    std::cerr << "error: " << msg << "\n";
    return 1;
}

bool next_field(std::istringstream &line, std::string &out) {
    return static_cast<bool>(std::getline(line, out, ','));
}

}  // namespace

int main(int argc, char **argv) {
    if (argc != 3) {
        std::cerr << "usage: parity <dataset.csv> <out.csv>\n";
        return 1;
    }
    std::ifstream in(argv[1]);
    if (!in) return fail(std::string("cannot open ") + argv[1]);

    std::string header;
    if (!std::getline(in, header)) return fail("line 1: empty dataset file");
    std::istringstream head(header);
    std::string magic, version, rate, n_samples_s;
    if (!next_field(head, magic) || magic != "sirec-dataset")
        return fail("line 1: bad magic, expected 'sirec-dataset'");
    if (!next_field(head, version) || version != "1")
        return fail("line 1: unsupported dataset version '" + version + "'");
    if (!next_field(head, rate) || !next_field(head, n_samples_s))
        return fail("line 1: truncated header");
    long n_samples = 0;
    try {
        n_samples = std::stol(n_samples_s);
    } catch (...) {
        return fail("line 1: bad sample count '" + n_samples_s + "'");
    }
    if (n_samples < SIREC_SEGMENT_LENGTH) {
        std::ostringstream msg;
        msg << "line 1: rows carry " << n_samples << " samples, model needs "
            << SIREC_SEGMENT_LENGTH;
        return fail(msg.str());
    }

    std::string column_header;
    if (!std::getline(in, column_header) ||
        column_header.compare(0, 6, "label,") != 0)
        return fail("line 2: expected column header starting with 'label,'");

    std::ofstream out(argv[2]);
    if (!out) return fail(std::string("cannot open ") + argv[2]);
    out << "row_index,predicted_label\n";

    static float segment[SIREC_SEGMENT_LENGTH];
    std::string row;
    long row_index = 0;
    long lineno = 2;
    while (std::getline(in, row)) {
        lineno++;
        if (row.empty()) continue;
        std::istringstream fields(row);
        std::string skip;
        for (int i = 0; i < 3; i++) {  // label, fine fill, material
            if (!next_field(fields, skip)) {
                std::ostringstream msg;
                msg << "line " << lineno << ": truncated row";
                return fail(msg.str());
            }
        }
        for (long j = 0; j < n_samples; j++) {
            std::string value;
            if (!next_field(fields, value)) {
                std::ostringstream msg;
                msg << "line " << lineno << ": expected " << n_samples
                    << " samples, row ends at " << j;
                return fail(msg.str());
            }
            if (j < SIREC_SEGMENT_LENGTH) {
                try {
                    segment[j] = std::stof(value);
                } catch (...) {
                    std::ostringstream msg;
                    msg << "line " << lineno << ": bad float '" << value << "'";
                    return fail(msg.str());
                }
            }
        }
        out << row_index << "," << sirec_predict(segment) << "\n";
        row_index++;
    }
    if (!out.flush()) return fail("failed writing predictions");
    std::cerr << "classified " << row_index << " rows\n";
    return 0;
}
