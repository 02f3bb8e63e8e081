#include <stdio.h>
#include <string.h>
#include "springer_lab.h"

static const char *NODE =
    "[field]\np = 3\nhermitian = true\n\n"
    "[[branch]]\nn = 1\ngamma = [[1, 0, 1]]\n\n"
    "[[branch]]\nn = 1\ngamma = [[1, 0, -1]]\n";

int main(void) {
    SlDatum *d = NULL;
    if (sl_datum_from_toml(NODE, &d) != SL_STATUS_OK) {
        fprintf(stderr, "%s\n", sl_last_error());
        return 1;
    }
    int64_t delta = -1;
    int64_t cond[4];
    size_t n = 0;
    if (sl_datum_delta(d, &delta) != SL_STATUS_OK || delta != 1) return 2;
    if (sl_datum_conductor(d, cond, 4, &n) != SL_STATUS_OK || n != 2 || cond[0] != 1) return 3;
    char *json = NULL;
    if (sl_report_json(d, SL_COMMAND_VERIFY_FL, &json) != SL_STATUS_OK) return 4;
    if (!strstr(json, "\"o_kappa\": 3")) return 5;
    sl_string_free(json);
    sl_datum_free(d);
    if (sl_datum_from_toml("[field]\np = 4\n", &d) != SL_STATUS_CONFIG) return 6;
    printf("ok %s\n", sl_last_error());
    return 0;
}
