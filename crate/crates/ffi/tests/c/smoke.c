#include <stdio.h>
#include <string.h>

#include "iacsmell.h"

static const char *SCRIPT =
    "- hosts: db\n"
    "  vars:\n"
    "    admin_password: \"\"\n"
    "  tasks:\n"
    "    - name: fetch\n"
    "      get_url: url=http://example.org/agent.tgz dest=/tmp/agent.tgz\n";

int main(void) {
    IacsAnalyzer *analyzer = NULL;
    IacsReport *report = NULL;
    if (iacs_analyzer_new(&analyzer) != IACS_STATUS_OK) {
        return 10;
    }
    if (iacs_analyze_source(analyzer, "play.yml", SCRIPT, &report) != IACS_STATUS_OK) {
        fprintf(stderr, "%s\n", iacs_last_error_message());
        return 11;
    }
    size_t n = iacs_report_len(report);
    for (size_t i = 0; i < n; i++) {
        IacsFinding f;
        if (iacs_report_get(report, i, &f) != IACS_STATUS_OK) {
            return 12;
        }
        printf("%s:%zu %s %.3f %d\n", f.file_path, f.line, iacs_smell_name(f.smell), f.confidence, f.kept);
    }
    IacsFinding unused;
    int bad = iacs_report_get(report, n, &unused) == IACS_STATUS_OUT_OF_RANGE
              && strlen(iacs_last_error_message()) > 0;
    iacs_report_free(report);
    iacs_analyzer_free(analyzer);
    printf("version %s\n", iacs_version());
    return bad ? 0 : 13;
}
