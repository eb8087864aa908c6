from hde.cli import main

main()
