from .precision_harness import main

main()
