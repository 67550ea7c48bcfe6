/* Builds a knowledge base, classifies one sentence, prints the JSON.
 *
 *   cargo build -p domainknn-ffi --release
 *   cc examples/capi_demo.c -Iinclude -L../../target/release -ldomainknn_ffi -lpthread -lm -ldl -o capi_demo
 *   ./capi_demo corpus.jsonl kb.json "offerta adsl e fibra"
 */
#include <stdio.h>
#include <stdlib.h>

#include "domainknn.h"

static void die(const char *stage) {
    char *message = dk_last_error_message();
    fprintf(stderr, "%s: %s\n", stage, message ? message : "unknown error");
    dk_string_free(message);
    exit(1);
}

int main(int argc, char **argv) {
    if (argc != 4) {
        fprintf(stderr, "usage: %s <corpus.jsonl> <kb.json> <sentence>\n", argv[0]);
        return 2;
    }

    char *summary = NULL;
    if (dk_build_kb(argv[1], argv[2], NULL, NULL, NULL, &summary) != DK_OK)
        die("build");
    printf("built: %s\n", summary);
    dk_string_free(summary);

    DkClassifier *classifier = dk_classifier_open(argv[2], NULL, NULL, NULL);
    if (!classifier)
        die("open");
    printf("rows=%llu classes=%llu vocab=%llu\n",
           (unsigned long long)dk_classifier_rows(classifier),
           (unsigned long long)dk_classifier_classes(classifier),
           (unsigned long long)dk_classifier_vocab_size(classifier));

    DkClassifyOptions options = dk_classify_options_default();
    options.workers = 4;
    char *json = NULL;
    if (dk_classifier_classify_json(classifier, argv[3], &options, &json) != DK_OK)
        die("classify");
    printf("%s\n", json);

    dk_string_free(json);
    dk_classifier_free(classifier);
    return 0;
}
