from .iolayer import main

main()
