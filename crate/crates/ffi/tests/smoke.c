#include <math.h>
#include <stdio.h>
#include "hyperell.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s\n", #x); return 1; } } while (0)

int main(void) {
    HyperellLData *ld = NULL;
    CHECK(hyperell_ldata_parse(3, "x^3+2*x+1", &ld) == HYPERELL_STATUS_OK);

    int64_t c[3];
    size_t n = 0;
    CHECK(hyperell_ldata_coeffs(ld, c, 3, &n) == HYPERELL_STATUS_OK);
    CHECK(n == 3 && c[0] == 1 && c[1] == 3 && c[2] == 3);

    double t[2];
    CHECK(hyperell_ldata_thetas(ld, t, 2, &n) == HYPERELL_STATUS_OK);
    CHECK(fabs(t[0] + t[1] - 1.0) < 1e-12);

    HyperellFkZeros *z = NULL;
    size_t count = 0;
    CHECK(hyperell_fk_zeros_new(ld, 8, &z) == HYPERELL_STATUS_OK);
    CHECK(hyperell_fk_zeros_count(z, &count) == HYPERELL_STATUS_OK && count >= 2);
    hyperell_fk_zeros_free(z);
    hyperell_ldata_free(ld);

    uint64_t bad[] = {2, 2, 1, 1};
    CHECK(hyperell_ldata_new(3, bad, 4, &ld) == HYPERELL_STATUS_INVALID_ARGUMENT);
    char msg[128];
    CHECK(hyperell_last_error(msg, sizeof msg) > 0);
    printf("ok %s\n", hyperell_version());
    return 0;
}
