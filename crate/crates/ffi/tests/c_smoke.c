#include <stdio.h>
#include <string.h>
#include "periodlab.h"

int main(void) {
    const char *doc = "{\"schema\": \"periodlab/1\", \"degree\": 3, "
                      "\"coeffs\": [[3, 0, 1, 0], [1, 0, -3, 0], [0, 3, 2, 0], [0, 1, -6, 0]]}";
    PeriodlabPolynomial *p = NULL;
    if (periodlab_polynomial_from_json(doc, &p) != PERIODLAB_STATUS_OK) return 10;
    double re[4], im[4];
    size_t len = 0;
    if (periodlab_critical_values(p, re, im, 4, &len) != PERIODLAB_STATUS_OK || len != 4) return 11;
    printf("%.6f %.6f %.6f %.6f\n", re[0], re[1], re[2], re[3]);
    PeriodlabPolynomial *bad = NULL;
    if (periodlab_polynomial_from_json("{", &bad) != PERIODLAB_STATUS_PARSE) return 12;
    char msg[128];
    if (periodlab_last_error(msg, sizeof msg) == 0 || strstr(msg, "line") == NULL) return 13;
    periodlab_polynomial_free(p);
    return 0;
}
