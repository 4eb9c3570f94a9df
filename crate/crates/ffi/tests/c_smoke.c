#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include "nccz.h"

#define CHECK(x) do { NcczStatus s_ = (x); if (s_ != NCCZ_STATUS_OK) { \
    char b[256]; nccz_last_error(b, sizeof b); fprintf(stderr, "%s -> %d: %s\n", #x, s_, b); return 1; } } while (0)

int main(void) {
    /* indicator of [1/4, 3/4) on [0,1), 64 cells, n = 1 */
    size_t cells = 64;
    double re[64];
    for (size_t i = 0; i < cells; i++) re[i] = (i >= 16 && i < 48) ? 1.0 : 0.0;
    NcczField *f = NULL;
    CHECK(nccz_field_new(1, 0, 6, 1, re, NULL, cells, &f));
    double l1;
    CHECK(nccz_field_norm(f, 1.0, &l1));
    if (fabs(l1 - 0.5) > 1e-12) { fprintf(stderr, "l1 %g\n", l1); return 1; }

    NcczKernel *k = NULL;
    CHECK(nccz_kernel_from_name("hilbert", 1, &k));
    NcczField *t = NULL;
    CHECK(nccz_truncated_apply(k, f, 0.125, &t));
    size_t tc, tn;
    CHECK(nccz_field_shape(t, &tc, &tn));
    if (tc != cells || tn != 1) return 1;

    int ok = 0;
    CHECK(nccz_cz_validate(f, 1.0, 0, &ok));
    if (!ok) return 1;

    char *json = NULL;
    CHECK(nccz_weak11_json(k, f, 1.0, &json));
    if (json == NULL || json[0] != '{') return 1;
    nccz_string_free(json);

    if (nccz_kernel_from_name("no-such-kernel", 1, &k) != NCCZ_STATUS_INVALID_ARGUMENT) return 1;
    if (nccz_field_norm(NULL, 1.0, &l1) != NCCZ_STATUS_NULL_POINTER) return 1;

    nccz_field_free(t);
    nccz_field_free(f);
    nccz_kernel_free(k);
    printf("c smoke ok %s\n", nccz_version());
    return 0;
}
