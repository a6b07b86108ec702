#include <stdio.h>
#include <string.h>

void reverse(char *s) {
  char *e = s + strlen(s) - 1;
  while (s < e) {
    char t = *s;
    *s++ = *e;
    *e-- = t;
  }
}

int main(void) {
  char buf[256];
  while (scanf("%255s", buf) == 1) {
    reverse(buf);
    puts(buf);
  }
  return 0;
}
