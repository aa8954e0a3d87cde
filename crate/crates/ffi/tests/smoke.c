#include <stdio.h>
#include <string.h>
#include "absa.h"

int main(int argc, char **argv) {
    if (argc < 2) return 2;
    AbsaCorpus *corpus = NULL;
    if (absa_corpus_load_xml(argv[1], "laptops", "test", &corpus) != ABSA_STATUS_OK) {
        fprintf(stderr, "%s\n", absa_last_error());
        return 1;
    }
    char *stats = NULL;
    if (absa_corpus_stats_json(corpus, &stats) != ABSA_STATUS_OK) return 1;
    printf("%zu %s\n", absa_corpus_len(corpus), stats);
    absa_string_free(stats);

    AbsaCorpus *missing = NULL;
    AbsaStatus s = absa_corpus_load_xml("/nonexistent.xml", "laptops", "test", &missing);
    printf("%d %s\n", (int)s, absa_last_error());
    absa_corpus_free(corpus);
    return 0;
}
